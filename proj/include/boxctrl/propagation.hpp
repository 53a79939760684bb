#pragma once

// Propagators of the two fixed-domain systems on the truncated basis:
//
//   auxiliary    H_v(t) = ell0^-2 Lap - ell0^-1 v(t) V
//   transformed  H_f(t) = [ell0 + lambda f]^-2 Lap - fdot [ell0 + lambda f]^-1 V
//
// with V = lambda x o p + delta p. Piecewise-constant data is propagated with
// exact exponentials; time-dependent coefficients use the exponential
// midpoint rule.

#include <map>
#include <mutex>
#include <vector>

#include "boxctrl/spectral_operators.hpp"

namespace boxctrl {

enum class ControlKind { constant, linear };

/// f(t) = offset + slope (t - t_k) on [t_k, t_{k+1}).
struct LinearPiece {
  double offset = 0.0;
  double slope = 0.0;
};

/// Piecewise-constant speed v(t), or piecewise-linear wall displacement f(t).
/// Segment k covers [t_k, t_{k+1}); the last segment is closed on the right.
class PiecewiseControl {
 public:
  /// Zero speed on [0, 1].
  PiecewiseControl();
  static PiecewiseControl constant(std::vector<double> breakpoints, std::vector<double> values);
  /// Equal-length segments on [0, horizon].
  static PiecewiseControl uniform_constant(double horizon, std::vector<double> values);
  static PiecewiseControl linear(std::vector<double> breakpoints, std::vector<LinearPiece> pieces);

  ControlKind kind() const noexcept { return kind_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  int segment_count() const noexcept { return static_cast<int>(breakpoints_.size()) - 1; }
  double start() const { return breakpoints_.front(); }
  double end() const { return breakpoints_.back(); }
  double duration() const { return end() - start(); }
  double segment_begin(int k) const { return breakpoints_.at(k); }
  double segment_end(int k) const { return breakpoints_.at(k + 1); }

  /// Segment containing t; breakpoints belong to the segment they start.
  int segment_at(double t) const;

  /// Constant kind: the segment value. Linear kind: the slope.
  double rate(int k) const;
  const std::vector<double>& values() const;
  LinearPiece piece(int k) const;

  /// Wall displacement (linear kind only). At a breakpoint the value of the
  /// segment starting there is returned.
  double f_at(double t) const;
  double f_on_segment(int k, double t) const;
  double f_segment_end(int k) const;

  double max_abs_rate() const;
  /// sup |f| over the whole control (linear kind only).
  double max_abs_f() const;
  /// sup |f| restricted to [start, until].
  double max_abs_f(double until) const;

  /// Concatenate a linear control starting where this one ends.
  PiecewiseControl then(const PiecewiseControl& tail) const;

 private:
  PiecewiseControl(ControlKind kind, std::vector<double> breakpoints, std::vector<double> a,
                   std::vector<double> b);

  ControlKind kind_;
  std::vector<double> breakpoints_;
  std::vector<double> level_;  // value (constant) or offset (linear)
  std::vector<double> slope_;  // zero for constant controls
};

struct Propagator {
  ComplexMatrix matrix;
  double t_from = 0.0;
  double t_to = 0.0;

  /// max |U^dagger U - I|
  double unitarity_defect() const;
  ComplexVector apply(const ComplexVector& psi) const { return matrix * psi; }
};

/// Hermitian eigendecomposition H = Q diag(e) Q^dagger.
struct EigenDecomposition {
  RealVector values;
  ComplexMatrix vectors;

  static EigenDecomposition of(const ComplexMatrix& hermitian);
  /// exp(-i h H)
  ComplexMatrix exponential(double h) const;
};

class AuxiliarySystem {
 public:
  AuxiliarySystem(const MotionParams& params, BasisTruncation n);

  const MotionParams& params() const noexcept { return params_; }
  int dim() const noexcept { return static_cast<int>(laplacian_.rows()); }
  const ComplexMatrix& laplacian() const noexcept { return laplacian_; }
  const ComplexMatrix& interaction() const noexcept { return interaction_; }

  HermitianOperator hamiltonian(double v) const;
  /// Eigendecomposition of H(v), cached by v.
  EigenDecomposition decomposition(double v) const;
  ComplexMatrix exponential(double v, double h) const;

  /// Ordered product of exact segment exponentials over [t_from, t_to].
  Propagator propagate(const PiecewiseControl& v, double t_from, double t_to) const;

 private:
  MotionParams params_;
  ComplexMatrix laplacian_;
  ComplexMatrix interaction_;
  mutable std::mutex cache_mutex_;
  mutable std::map<double, EigenDecomposition> cache_;
};

class TransformedSystem {
 public:
  TransformedSystem(const MotionParams& params, BasisTruncation n);

  const MotionParams& params() const noexcept { return params_; }
  int dim() const noexcept { return static_cast<int>(laplacian_.rows()); }

  /// H at displacement f and wall speed fdot; WallCollision when ell0 + lambda f <= 0.
  HermitianOperator hamiltonian(double f, double fdot) const;

  /// Throws WallCollision if the box degenerates anywhere along f.
  void check_admissible(const PiecewiseControl& f) const;

  /// Exponential midpoint rule with sub-steps no longer than `step`;
  /// segments with constant coefficients use one exact exponential.
  Propagator propagate(const PiecewiseControl& f, double t_from, double t_to, double step) const;

  /// States at the requested (non-decreasing) times, starting from psi0 at f.start().
  std::vector<ComplexVector> trajectory(const PiecewiseControl& f, const ComplexVector& psi0,
                                        const std::vector<double>& times, double step) const;

 private:
  ComplexMatrix hamiltonian_matrix(double f, double fdot) const;

  MotionParams params_;
  ComplexMatrix laplacian_;
  ComplexMatrix interaction_;
};

Propagator propagate_auxiliary(const MotionParams& params, BasisTruncation n,
                               const PiecewiseControl& v, double t_from, double t_to);

Propagator propagate_transformed(const MotionParams& params, BasisTruncation n,
                                 const PiecewiseControl& f, double t_from, double t_to,
                                 double step);

/// Sub-step length used when none is given: mean segment duration / 64.
double default_step(const PiecewiseControl& control, int fraction = 64);

/// Evolve a state of the moving box along f.
///
/// The state is stored by its coefficients on the eigenbasis of its own box,
/// which are exactly the reference-frame coefficients of W_{ell,d} Phi. The
/// physical propagator W^dagger(T) U~(T,0) W(0) is therefore the reference
/// propagator U~ acting on the coefficients, followed by relabelling the
/// geometry to (ell0 + lambda f(T), d0 + delta f(T)).
SpectralState evolve_moving_box(const MotionParams& params, const PiecewiseControl& f,
                                const SpectralState& phi0, double step);

/// ||(Lap + 1)^{-1/2} psi||
double minus_norm(const ComplexVector& psi);
/// ||(Lap + 1)^{1/2} psi||
double plus_norm(const ComplexVector& psi);
inline double minus_norm(const SpectralState& s) { return minus_norm(s.coeffs()); }
inline double plus_norm(const SpectralState& s) { return plus_norm(s.coeffs()); }

}  // namespace boxctrl
