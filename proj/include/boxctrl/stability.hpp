#pragma once

// Constants of the stability estimate
//
//   ||(U_n - U_m) Psi||_- <= L ||Psi||_+ sum_i ||f_{n,i} - f_{m,i}||_{L1}
//
// for Hamiltonians f_0(t) Lap + f_1(t) V, and the empirical checks of that
// bound and of the O(1/n) lifting convergence.

#include <vector>

#include "boxctrl/propagation.hpp"
#include "boxctrl/spectral_operators.hpp"

namespace boxctrl {

/// |<psi, A psi>| <= a <psi, Lap psi> + b ||psi||^2
struct FormBound {
  double a = 0.0;
  double b = 0.0;
};

struct FormBounds {
  FormBound momentum;  // (eps, 1 / (4 eps))
  FormBound dilation;  // (eps, 1 / (16 eps)), using |x| <= 1/2
};

FormBounds form_bound_constants(double epsilon);

/// Offset b with |<psi, V psi>| <= e <psi, Lap psi> + b ||psi||^2 for
/// V = lambda x o p + delta p. Splitting e optimally between the two terms
/// gives b = (lambda / 4 + |delta| / 2)^2 / e.
double interaction_form_offset(double lambda, double delta, double e);

/// Coefficients f_0 = ell^-2 and f_1 = -speed / ell of one family member on
/// [t_from, t_to]. A constant control is the auxiliary system (ell = ell0,
/// speed v); a linear one is the transformed system (ell = ell0 + lambda f,
/// speed fdot).
struct CoefficientFamily {
  MotionParams params;
  std::vector<PiecewiseControl> members;
  double t_from = 0.0;
  double t_to = 0.0;

  void validate() const;
  /// f_i of member k at t (i = 0, 1).
  double coefficient(int k, int i, double t) const;
  /// sup over members and i of ||d f_i / dt||_{L1(t_from, t_to)}
  double derivative_l1() const;
};

struct StabilityConstants {
  double M = 0.0;
  double mu = 0.0;
  double epsilon = 0.5;
  double b_eps = 0.0;
  double m = 0.0;
  double K = 0.0;
  double c = 0.0;
  double L = 0.0;
  double derivative_l1 = 0.0;
};

/// The proof's explicit formulas with nu = 1 perturbing operator:
/// b = b_V(eps mu / M), m = M b, c = max{M + mu eps, 1 + 2m, 1/(mu(1-eps)), 1},
/// K = max{1, eps, b_V(eps)}, L = c^8 exp(4 c^2 K sup ||fdot_i||_L1).
StabilityConstants compute_constants(const CoefficientFamily& family, double epsilon = 0.5);

/// L1 norm over [a, b] of |f_{k,i} - f_{l,i}| summed over i.
double coefficient_difference_l1(const CoefficientFamily& family, int k, int l);

struct SegmentBound {
  double t_from = 0.0;
  double t_to = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  StabilityConstants constants{};
};

/// Segment-wise check of the stability inequality between the lift f_n of v
/// and the lift f_m (m_refine = 0 means the auxiliary system itself), on each
/// piece of their common refinement. Psi is propagated along member m to the
/// start of each piece.
std::vector<SegmentBound> verify_stability_bound(const MotionParams& params,
                                                 const PiecewiseControl& v, int n, int m_refine,
                                                 const ComplexVector& psi, double epsilon = 0.5,
                                                 int substeps_per_piece = 64);

/// ||G_n||_{L1} on every piece of f_n, with
/// G_n = (ell0^-2 - ell^-2) + v (ell0^-1 - ell^-1).
std::vector<double> lifting_gap_l1(const MotionParams& params, const PiecewiseControl& v, int n);

struct ConvergenceStudy {
  std::vector<int> n;
  std::vector<double> error;  // minus norm of U~_{f_n} Psi0 - U_v Psi0
  /// Least-squares slope of log(error) against log(n) over the errors above
  /// 1e-12 |Psi0|; NaN when fewer than two qualify.
  double slope = 0.0;
};

/// `step` <= 0 selects duration / (64 max n).
ConvergenceStudy lifting_convergence_study(const MotionParams& params, const PiecewiseControl& v,
                                           const ComplexVector& psi0, const std::vector<int>& n_list,
                                           double step = 0.0);

}  // namespace boxctrl
