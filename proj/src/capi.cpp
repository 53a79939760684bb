#include "boxctrl/boxctrl.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "boxctrl/control.hpp"
#include "boxctrl/errors.hpp"
#include "boxctrl/propagation.hpp"
#include "boxctrl/resonance.hpp"
#include "boxctrl/spectral_operators.hpp"
#include "boxctrl/stability.hpp"

using namespace boxctrl;

struct boxctrl_transfer_result {
  SynthesisResult result;
  SpectralState initial;
};

namespace {

thread_local std::string last_error;

// Runs body and maps library exceptions onto status codes.
template <typename Body>
boxctrl_status guarded(Body body) {
  try {
    last_error.clear();
    body();
    return BOXCTRL_OK;
  } catch (const InvalidArgument& e) {
    last_error = e.what();
    return BOXCTRL_ERR_INVALID_ARGUMENT;
  } catch (const WallCollision& e) {
    last_error = e.what();
    return BOXCTRL_ERR_WALL_COLLISION;
  } catch (const NoImprovement& e) {
    last_error = e.what();
    return BOXCTRL_ERR_NO_IMPROVEMENT;
  } catch (const BudgetExceeded& e) {
    last_error = e.what();
    return BOXCTRL_ERR_BUDGET_EXCEEDED;
  } catch (const UnsupportedMotion& e) {
    last_error = e.what();
    return BOXCTRL_ERR_UNSUPPORTED_MOTION;
  } catch (const InfeasibleRamp& e) {
    last_error = e.what();
    return BOXCTRL_ERR_INFEASIBLE_RAMP;
  } catch (const DegenerateMatching& e) {
    last_error = e.what();
    return BOXCTRL_ERR_DEGENERATE_MATCHING;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return BOXCTRL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return BOXCTRL_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return BOXCTRL_ERR_INTERNAL;
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw InvalidArgument(message);
}

MotionParams to_params(const boxctrl_motion* m) {
  require(m != nullptr, "motion parameters are NULL");
  MotionParams p{m->lambda, m->delta, m->ell0, m->d0, m->rate_bound};
  p.validate();
  return p;
}

void write_matrix(const ComplexMatrix& m, double* out) {
  require(out != nullptr, "output buffer is NULL");
  const Eigen::Index n = m.cols();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      out[2 * (r * n + c)] = m(r, c).real();
      out[2 * (r * n + c) + 1] = m(r, c).imag();
    }
  }
}

ComplexVector read_vector(const double* data, int n) {
  require(data != nullptr, "state buffer is NULL");
  require(n >= 2, "state dimension must be >= 2");
  ComplexVector v(n);
  for (int k = 0; k < n; ++k) v(k) = Complex(data[2 * k], data[2 * k + 1]);
  return v;
}

PiecewiseControl read_constant(const double* breakpoints, const double* values, int segments) {
  require(breakpoints != nullptr && values != nullptr, "control buffers are NULL");
  require(segments >= 1, "control needs at least one segment");
  return PiecewiseControl::constant(std::vector<double>(breakpoints, breakpoints + segments + 1),
                                    std::vector<double>(values, values + segments));
}

SpectrumOptions to_options(const boxctrl_spectrum_options* o) {
  SpectrumOptions s;
  if (o != nullptr) {
    s.tracked = o->tracked;
    s.tail_modes = o->tail_modes;
    s.min_overlap_gap = o->min_overlap_gap;
  }
  return s;
}

void write_quadruples(const std::vector<Quadruple>& q, boxctrl_quadruple* out, int capacity) {
  if (out == nullptr) return;
  const int n = std::min(capacity, static_cast<int>(q.size()));
  for (int i = 0; i < n; ++i) out[i] = {q[i].s1, q[i].s2, q[i].t1, q[i].t2};
}

}  // namespace

extern "C" {

const char* boxctrl_version(void) { return BOXCTRL_VERSION; }

const char* boxctrl_status_name(boxctrl_status status) {
  switch (status) {
    case BOXCTRL_OK: return "ok";
    case BOXCTRL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BOXCTRL_ERR_WALL_COLLISION: return "wall collision";
    case BOXCTRL_ERR_NO_IMPROVEMENT: return "no improvement";
    case BOXCTRL_ERR_BUDGET_EXCEEDED: return "budget exceeded";
    case BOXCTRL_ERR_UNSUPPORTED_MOTION: return "unsupported motion";
    case BOXCTRL_ERR_INFEASIBLE_RAMP: return "infeasible ramp";
    case BOXCTRL_ERR_DEGENERATE_MATCHING: return "degenerate matching";
    case BOXCTRL_ERR_NOT_FOUND: return "not found";
    case BOXCTRL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* boxctrl_last_error(void) { return last_error.c_str(); }

void boxctrl_motion_init(boxctrl_motion* motion) {
  if (motion == nullptr) return;
  const MotionParams p;
  *motion = {p.lambda, p.delta, p.ell0, p.d0, p.rate_bound};
}

boxctrl_status boxctrl_operator_matrix(boxctrl_operator kind, const boxctrl_motion* motion, int n,
                                       double* out) {
  return guarded([&] {
    const BasisTruncation basis(n);
    switch (kind) {
      case BOXCTRL_OP_LAPLACIAN: write_matrix(laplacian_matrix(basis).matrix(), out); return;
      case BOXCTRL_OP_MOMENTUM: write_matrix(momentum_matrix(basis).matrix(), out); return;
      case BOXCTRL_OP_DILATION: write_matrix(dilation_matrix(basis).matrix(), out); return;
      case BOXCTRL_OP_INTERACTION:
        write_matrix(interaction_matrix(to_params(motion), basis).matrix(), out);
        return;
    }
    throw InvalidArgument("unknown operator kind");
  });
}

boxctrl_status boxctrl_frame_map(double src_length, double src_center, double dst_length,
                                 double dst_center, int n, double* out, double* deficiency) {
  return guarded([&] {
    const FrameMap map = frame_map_coefficients({src_length, src_center},
                                                {dst_length, dst_center}, BasisTruncation(n));
    write_matrix(map.matrix, out);
    if (deficiency != nullptr) {
      for (int k = 0; k < n; ++k) deficiency[k] = map.column_deficiency(k);
    }
  });
}

boxctrl_status boxctrl_propagate_auxiliary(const boxctrl_motion* motion, int n,
                                           const double* breakpoints, const double* values,
                                           int segments, double t_from, double t_to,
                                           double* out) {
  return guarded([&] {
    const PiecewiseControl v = read_constant(breakpoints, values, segments);
    write_matrix(propagate_auxiliary(to_params(motion), BasisTruncation(n), v, t_from, t_to).matrix,
                 out);
  });
}

boxctrl_status boxctrl_propagate_transformed(const boxctrl_motion* motion, int n,
                                             const double* breakpoints, const double* offsets,
                                             const double* slopes, int segments, double t_from,
                                             double t_to, double step, double* out) {
  return guarded([&] {
    require(breakpoints != nullptr && offsets != nullptr && slopes != nullptr,
            "control buffers are NULL");
    require(segments >= 1, "control needs at least one segment");
    std::vector<LinearPiece> pieces(segments);
    for (int k = 0; k < segments; ++k) pieces[k] = {offsets[k], slopes[k]};
    const PiecewiseControl f = PiecewiseControl::linear(
        std::vector<double>(breakpoints, breakpoints + segments + 1), std::move(pieces));
    write_matrix(
        propagate_transformed(to_params(motion), BasisTruncation(n), f, t_from, t_to, step).matrix,
        out);
  });
}

boxctrl_status boxctrl_minus_norm(const double* psi, int n, double* out) {
  return guarded([&] {
    require(out != nullptr, "output is NULL");
    *out = minus_norm(read_vector(psi, n));
  });
}

boxctrl_status boxctrl_plus_norm(const double* psi, int n, double* out) {
  return guarded([&] {
    require(out != nullptr, "output is NULL");
    *out = plus_norm(read_vector(psi, n));
  });
}

void boxctrl_transfer_config_init(boxctrl_transfer_config* config) {
  if (config == nullptr) return;
  std::memset(config, 0, sizeof(*config));
  const SynthesisOptions o;
  config->dim = 16;
  config->ell0 = 1.0;
  config->ell1 = 1.0;
  config->epsilon = 0.1;
  config->rate_bound = 1.0;
  config->n_min = o.n_min;
  config->n_max = o.n_max;
  config->multistarts = o.multistarts;
  config->max_iterations = o.max_iterations;
  config->threads = o.threads;
  config->step_fraction = o.step_fraction;
  config->seed = o.seed;
}

boxctrl_status boxctrl_transfer_solve(const boxctrl_transfer_config* config,
                                      boxctrl_transfer_result** result) {
  return guarded([&] {
    require(config != nullptr && result != nullptr, "config or result pointer is NULL");
    *result = nullptr;
    SynthesisOptions o;
    if (config->segment_schedule != nullptr && config->segment_schedule_len > 0) {
      o.segment_schedule.assign(config->segment_schedule,
                                config->segment_schedule + config->segment_schedule_len);
    }
    if (config->horizon_schedule != nullptr && config->horizon_schedule_len > 0) {
      o.horizon_schedule.assign(config->horizon_schedule,
                                config->horizon_schedule + config->horizon_schedule_len);
    }
    o.n_min = config->n_min;
    o.n_max = config->n_max;
    o.multistarts = config->multistarts;
    o.max_iterations = config->max_iterations;
    o.threads = config->threads;
    o.step_fraction = config->step_fraction;
    o.seed = config->seed;

    TransferProblem problem{
        SpectralState(read_vector(config->initial, config->dim), {config->ell0, config->d0}),
        SpectralState(read_vector(config->target, config->dim), {config->ell1, config->d1}),
        config->epsilon, config->rate_bound, o};
    SynthesisResult r = solve_transfer(problem);
    *result = new boxctrl_transfer_result{std::move(r), problem.initial};
  });
}

void boxctrl_transfer_result_free(boxctrl_transfer_result* result) { delete result; }

boxctrl_status boxctrl_transfer_result_summary(const boxctrl_transfer_result* result,
                                               boxctrl_transfer_summary* s) {
  return guarded([&] {
    require(result != nullptr && s != nullptr, "result or summary is NULL");
    const SynthesisResult& r = result->result;
    s->achieved_error = r.achieved_error;
    s->fidelity = r.fidelity;
    s->auxiliary_fidelity = r.auxiliary_fidelity;
    s->lifting_error = r.lifting_error;
    s->duration = r.f.end();
    s->horizon = r.horizon;
    s->ramp_start = r.ramp_start;
    s->coast_duration = r.coast_duration;
    s->ramp_duration = r.ramp_duration;
    s->step = r.step;
    s->n_refine = r.n_refine;
    s->segments = r.segments;
    s->control_segments = r.f.segment_count();
    s->lambda = r.params.lambda;
    s->delta = r.params.delta;
    s->final_length = r.final_geometry.length();
    s->final_center = r.final_geometry.center();
    s->starts_at_zero = r.checks.starts_at_zero;
    s->reaches_final_value = r.checks.reaches_final_value;
    s->within_f_limit = r.checks.within_f_limit;
    s->rate_bounded = r.checks.rate_bounded;
    s->no_collision = r.checks.no_collision;
  });
}

boxctrl_status boxctrl_transfer_result_breakpoints(const boxctrl_transfer_result* result,
                                                   double* out) {
  return guarded([&] {
    require(result != nullptr && out != nullptr, "result or output is NULL");
    const std::vector<double>& bp = result->result.f.breakpoints();
    std::copy(bp.begin(), bp.end(), out);
  });
}

boxctrl_status boxctrl_transfer_result_sample(const boxctrl_transfer_result* result, double t,
                                              double* v, double* f, double* ell, double* d) {
  return guarded([&] {
    require(result != nullptr, "result is NULL");
    const PiecewiseControl& c = result->result.f;
    require(t >= c.start() && t <= c.end(), "sample time outside the control horizon");
    const int k = c.segment_at(t);
    const double value = c.f_on_segment(k, t);
    const BoxGeometry g = result->result.params.geometry_at(value);
    if (v != nullptr) *v = c.rate(k);
    if (f != nullptr) *f = value;
    if (ell != nullptr) *ell = g.length();
    if (d != nullptr) *d = g.center();
  });
}

boxctrl_status boxctrl_transfer_result_trajectory(const boxctrl_transfer_result* result,
                                                  const double* times, int count, double* out) {
  return guarded([&] {
    require(result != nullptr && times != nullptr && out != nullptr, "NULL argument");
    require(count >= 0, "count must be >= 0");
    const SynthesisResult& r = result->result;
    const int dim = result->initial.dim();
    const TransformedSystem system(r.params, BasisTruncation(dim));
    const std::vector<ComplexVector> states = system.trajectory(
        r.f, result->initial.coeffs(), std::vector<double>(times, times + count), r.step);
    for (int i = 0; i < count; ++i) {
      for (int k = 0; k < dim; ++k) out[i * dim + k] = std::norm(states[i](k));
    }
  });
}

boxctrl_status boxctrl_resonances_at_zero(int n, int max_index, boxctrl_quadruple* out,
                                          int capacity, int* count) {
  return guarded([&] {
    const ResonanceReport r = find_resonances_at_zero(BasisTruncation(n), max_index);
    write_quadruples(r.quadruples, out, capacity);
    if (count != nullptr) *count = static_cast<int>(r.quadruples.size());
  });
}

void boxctrl_spectrum_options_init(boxctrl_spectrum_options* options) {
  if (options == nullptr) return;
  const SpectrumOptions s;
  *options = {s.tracked, s.tail_modes, s.min_overlap_gap};
}

boxctrl_status boxctrl_spectrum(const boxctrl_motion* motion, const double* eta, int grid_size,
                                int n, const boxctrl_spectrum_options* options, double* out) {
  return guarded([&] {
    require(eta != nullptr && out != nullptr, "NULL argument");
    require(grid_size >= 1, "grid_size must be >= 1");
    const SpectrumCurve c = spectrum_vs_eta(to_params(motion),
                                            std::vector<double>(eta, eta + grid_size),
                                            BasisTruncation(n), to_options(options));
    const int t = c.tracked();
    for (int g = 0; g < grid_size; ++g) {
      for (int j = 0; j < t; ++j) out[g * t + j] = c.eigenvalues(g, j);
    }
  });
}

boxctrl_status boxctrl_second_derivative_formula(const boxctrl_motion* motion, int j,
                                                 double* out) {
  return guarded([&] {
    require(out != nullptr, "output is NULL");
    *out = second_derivative_formula(to_params(motion), j);
  });
}

boxctrl_status boxctrl_finite_difference_curvature(const boxctrl_motion* motion, int j, int n,
                                                   double h,
                                                   const boxctrl_spectrum_options* options,
                                                   double* out) {
  return guarded([&] {
    require(out != nullptr, "output is NULL");
    *out = finite_difference_curvature(to_params(motion), j, BasisTruncation(n), h,
                                       to_options(options));
  });
}

boxctrl_status boxctrl_certify_chain(const boxctrl_motion* motion, double eta, int n,
                                     int max_index, double tol,
                                     const boxctrl_spectrum_options* options,
                                     boxctrl_certificate* certificate,
                                     boxctrl_quadruple* violations, int capacity) {
  return guarded([&] {
    require(certificate != nullptr, "certificate is NULL");
    const ChainCertificate c = certify_chain(to_params(motion), eta, BasisTruncation(n),
                                             max_index, tol, to_options(options));
    certificate->certified = c.certified;
    certificate->connected = c.connected;
    certificate->weak_link_count = static_cast<int>(c.weak_links.size());
    certificate->violation_count = static_cast<int>(c.violations.quadruples.size());
    write_quadruples(c.violations.quadruples, violations, capacity);
  });
}

boxctrl_status boxctrl_scan_nonresonant(const boxctrl_motion* motion, double eta_max,
                                        int grid_size, int n, int max_index, double tol,
                                        const boxctrl_spectrum_options* options, double* eta) {
  bool found = false;
  const boxctrl_status s = guarded([&] {
    require(eta != nullptr, "output is NULL");
    const std::optional<double> r = scan_for_nonresonant_eta(
        to_params(motion), eta_max, grid_size, BasisTruncation(n), max_index, tol,
        to_options(options));
    found = r.has_value();
    if (found) *eta = *r;
  });
  if (s != BOXCTRL_OK) return s;
  if (!found) {
    last_error = "no grid point in (0, eta_max] certifies the chain";
    return BOXCTRL_ERR_NOT_FOUND;
  }
  return BOXCTRL_OK;
}

boxctrl_status boxctrl_form_bounds(double epsilon, double* momentum_b, double* dilation_b) {
  return guarded([&] {
    const FormBounds b = form_bound_constants(epsilon);
    if (momentum_b != nullptr) *momentum_b = b.momentum.b;
    if (dilation_b != nullptr) *dilation_b = b.dilation.b;
  });
}

boxctrl_status boxctrl_stability_constants_for(const boxctrl_motion* motion,
                                               const double* breakpoints, const double* values,
                                               int segments, const int* n_list, int n_count,
                                               double epsilon, boxctrl_stability_constants* out) {
  return guarded([&] {
    require(out != nullptr, "output is NULL");
    require(n_count >= 0 && (n_count == 0 || n_list != nullptr), "bad n_list");
    const PiecewiseControl v = read_constant(breakpoints, values, segments);
    CoefficientFamily family{to_params(motion), {v}, v.start(), v.end()};
    for (int i = 0; i < n_count; ++i) family.members.push_back(lift_control(v, n_list[i]));
    const StabilityConstants k = compute_constants(family, epsilon);
    *out = {k.M, k.mu, k.epsilon, k.b_eps, k.m, k.K, k.c, k.L, k.derivative_l1};
  });
}

boxctrl_status boxctrl_stability_bound(const boxctrl_motion* motion, const double* breakpoints,
                                       const double* values, int segments, int n, int m_refine,
                                       const double* psi, int dim, double epsilon,
                                       boxctrl_segment_bound* out, int capacity, int* count) {
  return guarded([&] {
    const PiecewiseControl v = read_constant(breakpoints, values, segments);
    const std::vector<SegmentBound> b =
        verify_stability_bound(to_params(motion), v, n, m_refine, read_vector(psi, dim), epsilon);
    if (out != nullptr) {
      const int m = std::min(capacity, static_cast<int>(b.size()));
      for (int i = 0; i < m; ++i) out[i] = {b[i].t_from, b[i].t_to, b[i].lhs, b[i].rhs, b[i].constants.L};
    }
    if (count != nullptr) *count = static_cast<int>(b.size());
  });
}

boxctrl_status boxctrl_lifting_gap_l1(const boxctrl_motion* motion, const double* breakpoints,
                                      const double* values, int segments, int n, double* out,
                                      int capacity, int* count) {
  return guarded([&] {
    const PiecewiseControl v = read_constant(breakpoints, values, segments);
    const std::vector<double> g = lifting_gap_l1(to_params(motion), v, n);
    if (out != nullptr) {
      std::copy_n(g.begin(), std::min(capacity, static_cast<int>(g.size())), out);
    }
    if (count != nullptr) *count = static_cast<int>(g.size());
  });
}

boxctrl_status boxctrl_lifting_convergence(const boxctrl_motion* motion, const double* breakpoints,
                                           const double* values, int segments, const double* psi,
                                           int dim, const int* n_list, int n_count, double step,
                                           double* errors, double* slope) {
  return guarded([&] {
    require(n_list != nullptr && n_count >= 1, "n_list is empty");
    const PiecewiseControl v = read_constant(breakpoints, values, segments);
    const ConvergenceStudy s =
        lifting_convergence_study(to_params(motion), v, read_vector(psi, dim),
                                  std::vector<int>(n_list, n_list + n_count), step);
    if (errors != nullptr) std::copy(s.error.begin(), s.error.end(), errors);
    if (slope != nullptr) *slope = s.slope;
  });
}

}  // extern "C"
