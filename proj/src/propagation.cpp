#include "boxctrl/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "boxctrl/errors.hpp"

namespace boxctrl {

namespace {

constexpr double kTimeTol = 1e-12;
constexpr std::size_t kCacheLimit = 4096;

void check_breakpoints(const std::vector<double>& bp) {
  if (bp.size() < 2) throw InvalidArgument("a control needs at least one segment");
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    if (!std::isfinite(bp[k]) || !std::isfinite(bp[k + 1]) || !(bp[k + 1] > bp[k])) {
      throw InvalidArgument("control breakpoints must be finite and strictly increasing");
    }
  }
}

}  // namespace

PiecewiseControl::PiecewiseControl(ControlKind kind, std::vector<double> breakpoints,
                                   std::vector<double> a, std::vector<double> b)
    : kind_(kind), breakpoints_(std::move(breakpoints)), level_(std::move(a)), slope_(std::move(b)) {
  check_breakpoints(breakpoints_);
  if (level_.size() + 1 != breakpoints_.size() || slope_.size() != level_.size()) {
    throw InvalidArgument("control needs exactly one datum per segment");
  }
  for (std::size_t k = 0; k < level_.size(); ++k) {
    if (!std::isfinite(level_[k]) || !std::isfinite(slope_[k])) {
      throw InvalidArgument("control data must be finite");
    }
  }
}

PiecewiseControl::PiecewiseControl()
    : PiecewiseControl(ControlKind::constant, {0.0, 1.0}, {0.0}, {0.0}) {}

PiecewiseControl PiecewiseControl::constant(std::vector<double> breakpoints,
                                            std::vector<double> values) {
  std::vector<double> zeros(values.size(), 0.0);
  return {ControlKind::constant, std::move(breakpoints), std::move(values), std::move(zeros)};
}

PiecewiseControl PiecewiseControl::uniform_constant(double horizon, std::vector<double> values) {
  if (!(horizon > 0.0)) throw InvalidArgument("control horizon must be positive");
  if (values.empty()) throw InvalidArgument("control needs at least one segment");
  const std::size_t d = values.size();
  std::vector<double> bp(d + 1);
  for (std::size_t k = 0; k <= d; ++k) bp[k] = horizon * static_cast<double>(k) / static_cast<double>(d);
  bp.back() = horizon;
  return constant(std::move(bp), std::move(values));
}

PiecewiseControl PiecewiseControl::linear(std::vector<double> breakpoints,
                                          std::vector<LinearPiece> pieces) {
  std::vector<double> offsets(pieces.size());
  std::vector<double> slopes(pieces.size());
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    offsets[k] = pieces[k].offset;
    slopes[k] = pieces[k].slope;
  }
  return {ControlKind::linear, std::move(breakpoints), std::move(offsets), std::move(slopes)};
}

int PiecewiseControl::segment_at(double t) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  const int k = static_cast<int>(it - breakpoints_.begin()) - 1;
  return std::clamp(k, 0, segment_count() - 1);
}

double PiecewiseControl::rate(int k) const {
  return kind_ == ControlKind::constant ? level_.at(k) : slope_.at(k);
}

const std::vector<double>& PiecewiseControl::values() const {
  if (kind_ != ControlKind::constant) throw InvalidArgument("values() needs a constant control");
  return level_;
}

LinearPiece PiecewiseControl::piece(int k) const {
  if (kind_ != ControlKind::linear) throw InvalidArgument("piece() needs a linear control");
  return {level_.at(k), slope_.at(k)};
}

double PiecewiseControl::f_on_segment(int k, double t) const {
  if (kind_ != ControlKind::linear) throw InvalidArgument("f is defined for linear controls only");
  return level_.at(k) + slope_.at(k) * (t - breakpoints_.at(k));
}

double PiecewiseControl::f_at(double t) const { return f_on_segment(segment_at(t), t); }

double PiecewiseControl::f_segment_end(int k) const { return f_on_segment(k, breakpoints_.at(k + 1)); }

double PiecewiseControl::max_abs_rate() const {
  double m = 0.0;
  for (int k = 0; k < segment_count(); ++k) m = std::max(m, std::abs(rate(k)));
  return m;
}

double PiecewiseControl::max_abs_f() const { return max_abs_f(end()); }

double PiecewiseControl::max_abs_f(double until) const {
  double m = 0.0;
  for (int k = 0; k < segment_count(); ++k) {
    if (breakpoints_[k] > until) break;
    const double stop = std::min(breakpoints_[k + 1], until);
    m = std::max({m, std::abs(f_on_segment(k, breakpoints_[k])), std::abs(f_on_segment(k, stop))});
  }
  return m;
}

PiecewiseControl PiecewiseControl::then(const PiecewiseControl& tail) const {
  if (kind_ != ControlKind::linear || tail.kind_ != ControlKind::linear) {
    throw InvalidArgument("only linear controls can be concatenated");
  }
  std::vector<double> bp = breakpoints_;
  std::vector<double> a = level_;
  std::vector<double> b = slope_;
  const double shift = end() - tail.start();
  for (int k = 0; k < tail.segment_count(); ++k) {
    bp.push_back(tail.breakpoints_[k + 1] + shift);
    a.push_back(tail.level_[k]);
    b.push_back(tail.slope_[k]);
  }
  return {ControlKind::linear, std::move(bp), std::move(a), std::move(b)};
}

double Propagator::unitarity_defect() const {
  const auto n = matrix.rows();
  return (matrix.adjoint() * matrix - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

EigenDecomposition EigenDecomposition::of(const ComplexMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian);
  if (solver.info() != Eigen::Success) throw Error("Hermitian eigensolver failed to converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix EigenDecomposition::exponential(double h) const {
  ComplexVector phases(values.size());
  for (Eigen::Index k = 0; k < values.size(); ++k) phases(k) = std::polar(1.0, -h * values(k));
  return vectors * phases.asDiagonal() * vectors.adjoint();
}

AuxiliarySystem::AuxiliarySystem(const MotionParams& params, BasisTruncation n)
    : params_(params),
      laplacian_(laplacian_matrix(n).matrix()),
      interaction_(interaction_matrix(params, n).matrix()) {}

HermitianOperator AuxiliarySystem::hamiltonian(double v) const {
  return {laplacian_ / (params_.ell0 * params_.ell0) - (v / params_.ell0) * interaction_,
          OperatorKind::hamiltonian};
}

EigenDecomposition AuxiliarySystem::decomposition(double v) const {
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(v); it != cache_.end()) return it->second;
  }
  EigenDecomposition d = EigenDecomposition::of(hamiltonian(v).matrix());
  std::lock_guard lock(cache_mutex_);
  if (cache_.size() >= kCacheLimit) cache_.clear();
  cache_.emplace(v, d);
  return d;
}

ComplexMatrix AuxiliarySystem::exponential(double v, double h) const {
  return decomposition(v).exponential(h);
}

namespace {

void check_span(const PiecewiseControl& c, double t_from, double t_to) {
  const double slack = kTimeTol * std::max(1.0, std::abs(c.end()));
  if (!(t_from <= t_to) || t_from < c.start() - slack || t_to > c.end() + slack) {
    throw InvalidArgument("time span [" + std::to_string(t_from) + ", " + std::to_string(t_to) +
                          "] lies outside the control domain");
  }
}

// Calls visit(k, a, b) for each non-empty overlap of [t_from, t_to] with segment k.
template <typename Visit>
void for_each_overlap(const PiecewiseControl& c, double t_from, double t_to, Visit visit) {
  for (int k = 0; k < c.segment_count(); ++k) {
    const double a = std::max(t_from, c.segment_begin(k));
    const double b = std::min(t_to, c.segment_end(k));
    if (b > a) visit(k, a, b);
  }
}

}  // namespace

Propagator AuxiliarySystem::propagate(const PiecewiseControl& v, double t_from,
                                      double t_to) const {
  if (v.kind() != ControlKind::constant) {
    throw InvalidArgument("auxiliary propagation needs a piecewise-constant control");
  }
  check_span(v, t_from, t_to);
  ComplexMatrix u = ComplexMatrix::Identity(dim(), dim());
  for_each_overlap(v, t_from, t_to, [&](int k, double a, double b) {
    u = exponential(v.rate(k), b - a) * u;
  });
  return {std::move(u), t_from, t_to};
}

TransformedSystem::TransformedSystem(const MotionParams& params, BasisTruncation n)
    : params_(params),
      laplacian_(laplacian_matrix(n).matrix()),
      interaction_(interaction_matrix(params, n).matrix()) {}

ComplexMatrix TransformedSystem::hamiltonian_matrix(double f, double fdot) const {
  const double ell = params_.ell0 + params_.lambda * f;
  if (!(ell > 0.0)) {
    throw WallCollision("box length ell0 + lambda f = " + std::to_string(ell) +
                        " is not positive; the control is inadmissible");
  }
  return laplacian_ / (ell * ell) - (fdot / ell) * interaction_;
}

HermitianOperator TransformedSystem::hamiltonian(double f, double fdot) const {
  return {hamiltonian_matrix(f, fdot), OperatorKind::hamiltonian};
}

void TransformedSystem::check_admissible(const PiecewiseControl& f) const {
  if (f.kind() != ControlKind::linear) {
    throw InvalidArgument("transformed propagation needs a piecewise-linear control");
  }
  for (int k = 0; k < f.segment_count(); ++k) {
    for (double t : {f.segment_begin(k), f.segment_end(k)}) {
      const double ell = params_.ell0 + params_.lambda * f.f_on_segment(k, t);
      if (!(ell > 0.0)) {
        throw WallCollision("box collapses at t = " + std::to_string(t) +
                            " (ell = " + std::to_string(ell) + ")");
      }
    }
  }
}

Propagator TransformedSystem::propagate(const PiecewiseControl& f, double t_from, double t_to,
                                        double step) const {
  check_admissible(f);
  check_span(f, t_from, t_to);
  if (!(step > 0.0)) throw InvalidArgument("integrator step must be positive");

  ComplexMatrix u = ComplexMatrix::Identity(dim(), dim());
  for_each_overlap(f, t_from, t_to, [&](int k, double a, double b) {
    const double slope = f.rate(k);
    if (slope == 0.0 || params_.lambda == 0.0) {
      const ComplexMatrix h = hamiltonian_matrix(f.f_on_segment(k, a), slope);
      u = EigenDecomposition::of(h).exponential(b - a) * u;
      return;
    }
    const int substeps = std::max(1, static_cast<int>(std::ceil((b - a) / step - 1e-9)));
    const double h = (b - a) / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double mid = a + (s + 0.5) * h;
      const ComplexMatrix hm = hamiltonian_matrix(f.f_on_segment(k, mid), slope);
      u = EigenDecomposition::of(hm).exponential(h) * u;
    }
  });
  return {std::move(u), t_from, t_to};
}

std::vector<ComplexVector> TransformedSystem::trajectory(const PiecewiseControl& f,
                                                         const ComplexVector& psi0,
                                                         const std::vector<double>& times,
                                                         double step) const {
  std::vector<ComplexVector> out;
  out.reserve(times.size());
  ComplexVector psi = psi0;
  double now = f.start();
  for (double t : times) {
    if (t < now) throw InvalidArgument("trajectory times must be non-decreasing");
    if (t > now) {
      psi = propagate(f, now, std::min(t, f.end()), step).apply(psi);
      now = t;
    }
    out.push_back(psi);
  }
  return out;
}

Propagator propagate_auxiliary(const MotionParams& params, BasisTruncation n,
                               const PiecewiseControl& v, double t_from, double t_to) {
  return AuxiliarySystem(params, n).propagate(v, t_from, t_to);
}

Propagator propagate_transformed(const MotionParams& params, BasisTruncation n,
                                 const PiecewiseControl& f, double t_from, double t_to,
                                 double step) {
  return TransformedSystem(params, n).propagate(f, t_from, t_to, step);
}

double default_step(const PiecewiseControl& control, int fraction) {
  if (fraction < 1) throw InvalidArgument("step fraction must be >= 1");
  return control.duration() / control.segment_count() / fraction;
}

SpectralState evolve_moving_box(const MotionParams& params, const PiecewiseControl& f,
                                const SpectralState& phi0, double step) {
  params.validate();
  if (f.kind() != ControlKind::linear) {
    throw InvalidArgument("moving-box evolution needs a piecewise-linear wall displacement");
  }
  const BoxGeometry start = params.geometry_at(f.f_at(f.start()));
  if (!phi0.geometry().approx_equal(start, 1e-10)) {
    throw InvalidArgument("initial state is not referenced to the box at the start of the motion");
  }
  const TransformedSystem system(params, BasisTruncation(phi0.dim()));
  const Propagator u = system.propagate(f, f.start(), f.end(), step);
  const double f_end = f.f_segment_end(f.segment_count() - 1);
  return {u.apply(phi0.coeffs()), params.geometry_at(f_end)};
}

namespace {

double weighted_norm(const ComplexVector& psi, double power) {
  const RealVector e = dirichlet_eigenvalues(static_cast<int>(psi.size()));
  double s = 0.0;
  for (Eigen::Index k = 0; k < psi.size(); ++k) s += std::pow(e(k) + 1.0, power) * std::norm(psi(k));
  return std::sqrt(s);
}

}  // namespace

double minus_norm(const ComplexVector& psi) { return weighted_norm(psi, -1.0); }

double plus_norm(const ComplexVector& psi) { return weighted_norm(psi, 1.0); }

}  // namespace boxctrl
