#pragma once

// Constructive side of approximate controllability: search a piecewise
// constant speed v for the auxiliary system, lift it to a sawtooth wall
// displacement f_n with fdot_n = v, then steer f to its prescribed final
// value.

#include <cstdint>
#include <vector>

#include "boxctrl/propagation.hpp"
#include "boxctrl/spectral_operators.hpp"

namespace boxctrl {

struct SynthesisOptions {
  std::vector<int> segment_schedule{20, 40, 80};
  std::vector<double> horizon_schedule{2.0, 5.0, 10.0};
  int n_min = 4;
  int n_max = 1024;
  int multistarts = 8;
  int max_iterations = 300;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Integrator sub-step is (auxiliary segment duration) / step_fraction.
  int step_fraction = 64;
  /// Amplitudes are confined to |v| <= r (1 - margin_fraction).
  double margin_fraction = 1e-3;

  void validate() const;
};

struct TransferProblem {
  SpectralState initial;  // referenced to box (ell0, d0)
  SpectralState target;   // referenced to box (ell1, d1)
  double epsilon = 0.1;
  double rate_bound = 1.0;
  SynthesisOptions options{};

  void validate() const;
};

/// Choose lambda = 1 and delta so that ell and d reach their targets together.
/// Throws UnsupportedMotion for a pure translation (ell1 == ell0, d1 != d0).
MotionParams reduce_motion(double ell0, double d0, double ell1, double d1,
                           double rate_bound = 1.0);

/// |<target, state>| / (||target|| ||state||)
double fidelity(const ComplexVector& target, const ComplexVector& state);

/// min over global phases theta of ||target - exp(i theta) state||
double aligned_distance(const ComplexVector& target, const ComplexVector& state);

struct PcSynthesis {
  PiecewiseControl v;
  double fidelity = 0.0;
  int best_start = 0;
};

/// Multistart L-BFGS ascent of |<target, U_v(T,0) initial>|^2 over the
/// segment amplitudes of v (equal segments on [0, horizon]), with exact
/// segment exponentials and adjoint gradients. Start 0 is v = 0; the others
/// are drawn from the seeded generator. Throws NoImprovement when no start
/// exceeds fidelity 0.5.
PcSynthesis synthesize_pc_control(const MotionParams& params, const ComplexVector& initial,
                                  const ComplexVector& target, int segments, double horizon,
                                  const SynthesisOptions& options);

/// Objective value and gradient for one amplitude vector; exposed for tests.
struct FidelityGradient {
  Complex overlap;
  RealVector gradient;  // d|overlap|^2 / dv_k
};
FidelityGradient fidelity_gradient(const AuxiliarySystem& system, const ComplexVector& initial,
                                   const ComplexVector& target, const RealVector& amplitudes,
                                   double horizon);

/// Sawtooth lift: refine the n equal parts of [0, T] by the breakpoints of v
/// and on every piece let f start at 0 and grow with slope v.
PiecewiseControl lift_control(const PiecewiseControl& v, int n);

struct FinalSegment {
  PiecewiseControl f;          // extended control with f(T_new) = a
  double coast_duration = 0.0;
  double ramp_duration = 0.0;
  double fidelity = 0.0;       // |<target, state after extension>|
};

/// Extend f so that it ends at a: a coast at the current displacement whose
/// length is picked by a 1-D search over one drift revival period, followed
/// by a ramp to a at slope +-r/2. `state` is the reference-frame state at the
/// end of f and `target` the reference-frame target. The shortest coast whose
/// fidelity is within tolerance/2 of the best one is kept.
FinalSegment append_final_segment(const PiecewiseControl& f, double a, const MotionParams& params,
                                  double tolerance, const ComplexVector& state,
                                  const ComplexVector& target, double step);

struct ConstraintChecks {
  bool starts_at_zero = false;       // f(0) = 0
  bool reaches_final_value = false;  // f(T) = delta_ell / lambda
  bool within_f_limit = false;       // |f| < ell0 / lambda before the final ramp
  bool rate_bounded = false;         // |fdot| < r
  bool no_collision = false;         // ell(t) > 0 throughout

  bool all() const {
    return starts_at_zero && reaches_final_value && within_f_limit && rate_bounded && no_collision;
  }
};

struct SynthesisResult {
  MotionParams params;
  PiecewiseControl v;
  PiecewiseControl f;
  int n_refine = 0;
  int segments = 0;
  double horizon = 0.0;          // auxiliary horizon
  double ramp_start = 0.0;       // time at which the final ramp begins
  double coast_duration = 0.0;
  double ramp_duration = 0.0;
  double step = 0.0;
  double auxiliary_fidelity = 0.0;
  double lifting_error = 0.0;    // ||U~_{f_n} Psi0 - U_v Psi0||
  double fidelity = 0.0;
  double achieved_error = 0.0;   // phase-aligned L2 distance to the target
  BoxGeometry final_geometry{1.0, 0.0};
  ConstraintChecks checks{};
};

ConstraintChecks check_constraints(const MotionParams& params, const PiecewiseControl& f,
                                   double final_value, double ramp_start);

/// Full pipeline; the reported error is measured by evolving the moving box
/// along the returned control. Throws UnsupportedMotion, NoImprovement or
/// BudgetExceeded.
SynthesisResult solve_transfer(const TransferProblem& problem);

}  // namespace boxctrl
