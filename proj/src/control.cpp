#include "boxctrl/control.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "boxctrl/errors.hpp"
#include "lbfgs.hpp"

namespace boxctrl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNormTol = 1e-10;
constexpr double kMinFidelity = 0.5;

bool is_zero(double x, double scale) { return std::abs(x) <= 1e-14 * std::max(1.0, scale); }

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace

void SynthesisOptions::validate() const {
  if (segment_schedule.empty() || horizon_schedule.empty()) {
    throw InvalidArgument("escalation schedules must not be empty");
  }
  for (int s : segment_schedule) {
    if (s < 1) throw InvalidArgument("segment counts must be >= 1");
  }
  for (double t : horizon_schedule) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("horizons must be positive");
  }
  if (n_min < 1 || n_max < n_min) throw InvalidArgument("need 1 <= n_min <= n_max");
  if (multistarts < 1) throw InvalidArgument("multistarts must be >= 1");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  if (step_fraction < 1) throw InvalidArgument("step_fraction must be >= 1");
  if (!(margin_fraction > 0.0 && margin_fraction < 1.0)) {
    throw InvalidArgument("margin_fraction must lie in (0, 1)");
  }
}

void TransferProblem::validate() const {
  if (initial.dim() != target.dim()) {
    throw InvalidArgument("initial and target states have different truncations");
  }
  (void)BasisTruncation(initial.dim());
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be > 0");
  if (!(rate_bound > 0.0) || !std::isfinite(rate_bound)) {
    throw InvalidArgument("rate bound r must be > 0");
  }
  if (!(initial.norm() > 0.0)) throw InvalidArgument("initial state is zero");
  if (std::abs(initial.norm() - target.norm()) > kNormTol) {
    throw InvalidArgument("initial and target norms differ by more than 1e-10");
  }
  options.validate();
}

MotionParams reduce_motion(double ell0, double d0, double ell1, double d1, double rate_bound) {
  if (!(ell0 > 0.0) || !(ell1 > 0.0)) throw InvalidArgument("box lengths must be positive");
  const double dl = ell1 - ell0;
  const double dd = d1 - d0;
  const bool dl_zero = is_zero(dl, std::max(ell0, ell1));
  const bool dd_zero = is_zero(dd, std::max(std::abs(d0), std::abs(d1)));

  MotionParams p;
  p.lambda = 1.0;
  p.ell0 = ell0;
  p.d0 = d0;
  p.rate_bound = rate_bound;
  if (dl_zero && !dd_zero) {
    throw UnsupportedMotion(
        "pure translation (equal lengths, different centers) cannot be reached by this method; "
        "controllability of the translating box remains an open problem");
  }
  if (dl_zero && dd_zero) {
    p.delta = 1.0;
  } else if (dd_zero) {
    p.delta = 0.0;
  } else {
    p.delta = dd / dl;
  }
  p.validate();
  return p;
}

double fidelity(const ComplexVector& target, const ComplexVector& state) {
  const double norms = target.norm() * state.norm();
  if (!(norms > 0.0)) return 0.0;
  return std::abs(target.dot(state)) / norms;
}

double aligned_distance(const ComplexVector& target, const ComplexVector& state) {
  const double d2 = target.squaredNorm() + state.squaredNorm() - 2.0 * std::abs(target.dot(state));
  return std::sqrt(std::max(0.0, d2));
}

FidelityGradient fidelity_gradient(const AuxiliarySystem& system, const ComplexVector& initial,
                                   const ComplexVector& target, const RealVector& amplitudes,
                                   double horizon) {
  const int segs = static_cast<int>(amplitudes.size());
  if (segs < 1) throw InvalidArgument("need at least one segment");
  const double h = horizon / segs;
  const double ell0 = system.params().ell0;

  std::vector<EigenDecomposition> dec;
  std::vector<ComplexMatrix> prop;
  dec.reserve(segs);
  prop.reserve(segs);
  std::vector<ComplexVector> forward(segs + 1);
  forward[0] = initial;
  for (int k = 0; k < segs; ++k) {
    dec.push_back(EigenDecomposition::of(system.hamiltonian(amplitudes(k)).matrix()));
    prop.push_back(dec.back().exponential(h));
    forward[k + 1] = prop.back() * forward[k];
  }
  const Complex overlap = target.dot(forward[segs]);

  RealVector grad(segs);
  ComplexVector back = target;  // U_{k+1}^dagger ... U_d^dagger target
  for (int k = segs - 1; k >= 0; --k) {
    const ComplexMatrix& q = dec[k].vectors;
    const RealVector& e = dec[k].values;
    const ComplexVector a = q.adjoint() * forward[k];
    const ComplexVector b = q.adjoint() * back;
    const ComplexMatrix m = q.adjoint() * system.interaction() * q;
    // d exp(A)/dv in the eigenbasis of A = -i h H: Gamma o (Q^dagger dA Q),
    // with dA/dv = i h V / ell0.
    Complex d = 0.0;
    for (int r = 0; r < m.rows(); ++r) {
      Complex row = 0.0;
      for (int c = 0; c < m.cols(); ++c) {
        const Complex gamma =
            std::polar(1.0, -0.5 * h * (e(r) + e(c))) * sinc(0.5 * h * (e(r) - e(c)));
        row += gamma * m(r, c) * a(c);
      }
      d += std::conj(b(r)) * row;
    }
    d *= Complex(0.0, h / ell0);
    grad(k) = 2.0 * std::real(std::conj(overlap) * d);
    back = prop[k].adjoint() * back;
  }
  return {overlap, std::move(grad)};
}

PcSynthesis synthesize_pc_control(const MotionParams& params, const ComplexVector& initial,
                                  const ComplexVector& target, int segments, double horizon,
                                  const SynthesisOptions& options) {
  params.validate();
  options.validate();
  if (segments < 1) throw InvalidArgument("segments must be >= 1");
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  if (initial.size() != target.size()) throw InvalidArgument("state dimensions differ");

  const AuxiliarySystem system(params, BasisTruncation(static_cast<int>(initial.size())));
  const double vmax = params.rate_bound * (1.0 - options.margin_fraction);
  const ComplexVector psi0 = initial / initial.norm();
  const ComplexVector psi1 = target / target.norm();

  struct Run {
    RealVector v;
    double fidelity = -1.0;
  };
  std::vector<Run> runs(options.multistarts);

  auto run_start = [&](int index) {
    RealVector theta = RealVector::Zero(segments);
    if (index > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                        static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(index)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> u(-0.5 * params.rate_bound, 0.5 * params.rate_bound);
      for (int k = 0; k < segments; ++k) theta(k) = std::atanh(u(rng) / vmax);
    }
    auto objective = [&](const RealVector& th, RealVector& g) {
      RealVector v = vmax * th.array().tanh();
      const FidelityGradient fg = fidelity_gradient(system, psi0, psi1, v, horizon);
      const RealVector dv = vmax * (1.0 - th.array().tanh().square());
      g = -(fg.gradient.array() * dv.array()).matrix();
      return -std::norm(fg.overlap);
    };
    detail::LbfgsOptions lo;
    lo.max_iterations = options.max_iterations;
    lo.target_value = -(1.0 - 1e-13);
    const detail::LbfgsResult res = detail::lbfgs_minimize(objective, theta, lo);
    runs[index].v = vmax * res.x.array().tanh();
    runs[index].fidelity = std::sqrt(std::max(0.0, -res.value));
  };

  const int workers = std::min(options.threads, options.multistarts);
  if (workers <= 1) {
    for (int i = 0; i < options.multistarts; ++i) run_start(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < options.multistarts; i = next++) {
          try {
            run_start(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  int best = 0;
  for (int i = 1; i < options.multistarts; ++i) {
    if (runs[i].fidelity > runs[best].fidelity) best = i;
  }
  if (runs[best].fidelity < kMinFidelity) {
    throw NoImprovement("all " + std::to_string(options.multistarts) +
                        " starts stalled below fidelity 0.5 (best " +
                        std::to_string(runs[best].fidelity) + ") with " +
                        std::to_string(segments) + " segments on T = " + std::to_string(horizon));
  }
  const RealVector& v = runs[best].v;
  return {PiecewiseControl::uniform_constant(horizon, std::vector<double>(v.data(), v.data() + v.size())),
          runs[best].fidelity, best};
}

PiecewiseControl lift_control(const PiecewiseControl& v, int n) {
  if (v.kind() != ControlKind::constant) throw InvalidArgument("lifting needs a constant control");
  if (n < 1) throw InvalidArgument("lifting refinement n must be >= 1");
  const double t0 = v.start();
  const double T = v.duration();
  const double merge = 1e-12 * std::max(1.0, std::abs(v.end()));

  std::vector<double> bp;
  bp.reserve(n + v.segment_count() + 1);
  for (int i = 0; i <= n; ++i) bp.push_back(i == n ? v.end() : t0 + T * i / n);
  for (double t : v.breakpoints()) bp.push_back(t);
  std::sort(bp.begin(), bp.end());
  std::vector<double> refined{bp.front()};
  for (double t : bp) {
    if (t - refined.back() > merge) refined.push_back(t);
  }
  refined.back() = v.end();

  std::vector<LinearPiece> pieces;
  pieces.reserve(refined.size() - 1);
  for (std::size_t k = 0; k + 1 < refined.size(); ++k) {
    const double mid = 0.5 * (refined[k] + refined[k + 1]);
    pieces.push_back({0.0, v.rate(v.segment_at(mid))});
  }
  return PiecewiseControl::linear(std::move(refined), std::move(pieces));
}

FinalSegment append_final_segment(const PiecewiseControl& f, double a, const MotionParams& params,
                                  double tolerance, const ComplexVector& state,
                                  const ComplexVector& target, double step) {
  params.validate();
  if (f.kind() != ControlKind::linear) throw InvalidArgument("need a linear control to extend");
  if (state.size() != target.size()) throw InvalidArgument("state dimensions differ");
  if (!std::isfinite(a)) throw InvalidArgument("final value must be finite");
  if (params.lambda > 0.0 && !(params.ell0 + params.lambda * a > 0.0)) {
    throw InfeasibleRamp("final value a = " + std::to_string(a) +
                         " collapses the box (needs a > -ell0/lambda)");
  }
  if (!(tolerance >= 0.0)) throw InvalidArgument("tolerance must be >= 0");

  const int dim = static_cast<int>(state.size());
  const double f_end = f.f_segment_end(f.segment_count() - 1);
  const double rate = 0.5 * params.rate_bound;

  // Ramp first in the computation: its propagator R is fixed, so the coast is
  // chosen against the pulled-back target R^dagger target.
  FinalSegment out;
  ComplexVector pulled = target;
  std::optional<PiecewiseControl> ramp;
  if (std::abs(a - f_end) > 1e-15 * std::max(1.0, std::abs(a))) {
    out.ramp_duration = std::abs(a - f_end) / rate;
    const double slope = (a - f_end) / out.ramp_duration;
    ramp = PiecewiseControl::linear({0.0, out.ramp_duration}, {{f_end, slope}});
    const TransformedSystem system(params, BasisTruncation(dim));
    pulled = system.propagate(*ramp, 0.0, out.ramp_duration, step).matrix.adjoint() * target;
  }

  const double ell = params.ell0 + params.lambda * f_end;
  const RealVector rates = dirichlet_eigenvalues(dim) / (ell * ell);
  const double norms = std::max(state.norm() * target.norm(), 1e-300);
  auto overlap_at = [&](double tau) {
    Complex s = 0.0;
    for (int k = 0; k < dim; ++k) s += std::conj(pulled(k)) * std::polar(1.0, -tau * rates(k)) * state(k);
    return std::abs(s) / norms;
  };

  // exp(-i tau Lap / ell^2) is periodic with the revival time 2 ell^2 / pi.
  const double period = 2.0 * ell * ell / kPi;
  constexpr int kGrid = 8192;
  std::vector<double> grid(kGrid);
  int best = 0;
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = overlap_at(period * i / kGrid);
    if (grid[i] > grid[best]) best = i;
  }
  // Golden-section refinement around the best grid point.
  double lo = period * (best - 1) / kGrid;
  double hi = period * (best + 1) / kGrid;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double x1 = hi - phi * (hi - lo);
    const double x2 = lo + phi * (hi - lo);
    if (overlap_at(x1) >= overlap_at(x2)) hi = x2; else lo = x1;
  }
  double best_tau = std::max(0.0, 0.5 * (lo + hi));
  double best_value = overlap_at(best_tau);
  if (grid[best] >= best_value) {
    best_tau = period * best / kGrid;
    best_value = grid[best];
  }

  double tau = best_tau;
  double value = best_value;
  for (int i = 0; i < kGrid; ++i) {
    const double t = period * i / kGrid;
    if (t >= best_tau) break;
    if (grid[i] >= best_value - 0.5 * tolerance) {
      tau = t;
      value = grid[i];
      break;
    }
  }

  PiecewiseControl ext = f;
  if (tau > 0.0) {
    out.coast_duration = tau;
    ext = ext.then(PiecewiseControl::linear({0.0, tau}, {{f_end, 0.0}}));
  }
  if (ramp) ext = ext.then(*ramp);
  out.f = std::move(ext);
  out.fidelity = value;
  return out;
}

ConstraintChecks check_constraints(const MotionParams& params, const PiecewiseControl& f,
                                   double final_value, double ramp_start) {
  ConstraintChecks c;
  c.starts_at_zero = std::abs(f.f_at(f.start())) <= 1e-14;
  c.reaches_final_value =
      std::abs(f.f_segment_end(f.segment_count() - 1) - final_value) <= 1e-12;
  c.within_f_limit = f.max_abs_f(ramp_start) < params.f_limit();
  c.rate_bounded = f.max_abs_rate() < params.rate_bound;
  c.no_collision = true;
  for (int k = 0; k < f.segment_count(); ++k) {
    for (double t : {f.segment_begin(k), f.segment_end(k)}) {
      if (!(params.ell0 + params.lambda * f.f_on_segment(k, t) > 0.0)) c.no_collision = false;
    }
  }
  return c;
}

namespace {

// Sector (+1 even, -1 odd) holding the state, or 0 if it has both parities.
int parity_sector(const ComplexVector& psi) {
  const int n = static_cast<int>(psi.size());
  const RealMatrix even = parity_projector(1, BasisTruncation(n));
  const double w_even = (even.cast<Complex>() * psi).squaredNorm();
  const double w_odd = psi.squaredNorm() - w_even;
  const double tol = 1e-20 + 1e-10 * psi.squaredNorm();
  if (w_odd <= tol) return 1;
  if (w_even <= tol) return -1;
  return 0;
}

}  // namespace

SynthesisResult solve_transfer(const TransferProblem& problem) {
  problem.validate();
  const SynthesisOptions& opt = problem.options;
  const BoxGeometry g0 = problem.initial.geometry();
  const BoxGeometry g1 = problem.target.geometry();
  const MotionParams params =
      reduce_motion(g0.length(), g0.center(), g1.length(), g1.center(), problem.rate_bound);

  const ComplexVector& psi0 = problem.initial.coeffs();
  const ComplexVector& psi1 = problem.target.coeffs();
  const int dim = problem.initial.dim();
  if (params.delta == 0.0) {
    const int s0 = parity_sector(psi0);
    const int s1 = parity_sector(psi1);
    if (s0 == 0 || s0 != s1) {
      throw InvalidArgument(
          "pure dilation preserves parity: initial and target must lie in the same parity sector");
    }
  }

  const double a = (g1.length() - g0.length()) / params.lambda;
  const double eps = problem.epsilon;
  const double aux_threshold = 1.0 - eps * eps / 8.0;

  // Synthesize toward the target pulled back through the nominal ramp 0 -> a,
  // since the lifted control ends close to f = 0.
  const TransformedSystem transformed(params, BasisTruncation(dim));
  const AuxiliarySystem auxiliary(params, BasisTruncation(dim));

  bool any_synthesis = false;
  double best_error = std::numeric_limits<double>::infinity();
  for (double horizon : opt.horizon_schedule) {
    for (int segments : opt.segment_schedule) {
      const double step = horizon / segments / opt.step_fraction;
      ComplexVector aux_target = psi1;
      if (std::abs(a) > 0.0) {
        const double dur = std::abs(a) / (0.5 * params.rate_bound);
        const auto ramp = PiecewiseControl::linear({0.0, dur}, {{0.0, a / dur}});
        aux_target = transformed.propagate(ramp, 0.0, dur, step).matrix.adjoint() * psi1;
      }

      PcSynthesis syn;
      try {
        syn = synthesize_pc_control(params, psi0, aux_target, segments, horizon, opt);
      } catch (const NoImprovement&) {
        continue;
      }
      any_synthesis = true;
      if (syn.fidelity < aux_threshold) continue;

      const ComplexVector aux_final = auxiliary.propagate(syn.v, 0.0, horizon).apply(psi0);
      for (int n = opt.n_min; n <= opt.n_max; n *= 2) {
        const PiecewiseControl fn = lift_control(syn.v, n);
        if (!(fn.max_abs_f() < params.f_limit())) continue;
        const ComplexVector lifted = transformed.propagate(fn, 0.0, horizon, step).apply(psi0);
        const double lift_error = (lifted - aux_final).norm();
        if (lift_error > 0.5 * eps) continue;

        const FinalSegment fin =
            append_final_segment(fn, a, params, eps * eps / 8.0, lifted, psi1, step);
        const SpectralState final_state = evolve_moving_box(params, fin.f, problem.initial, step);
        const double err = aligned_distance(psi1, final_state.coeffs());
        best_error = std::min(best_error, err);
        if (!(err < eps)) continue;

        SynthesisResult r;
        r.params = params;
        r.v = syn.v;
        r.f = fin.f;
        r.n_refine = n;
        r.segments = segments;
        r.horizon = horizon;
        r.coast_duration = fin.coast_duration;
        r.ramp_duration = fin.ramp_duration;
        r.ramp_start = fin.f.end() - fin.ramp_duration;
        r.step = step;
        r.auxiliary_fidelity = syn.fidelity;
        r.lifting_error = lift_error;
        r.fidelity = fidelity(psi1, final_state.coeffs());
        r.achieved_error = err;
        r.final_geometry = final_state.geometry();
        r.checks = check_constraints(params, r.f, a, r.ramp_start);
        return r;
      }
    }
  }
  if (!any_synthesis) {
    throw NoImprovement("no horizon/segment budget reached auxiliary fidelity 0.5");
  }
  throw BudgetExceeded("escalation schedule exhausted; best final error " +
                       std::to_string(best_error) + " vs epsilon " + std::to_string(eps));
}

}  // namespace boxctrl
