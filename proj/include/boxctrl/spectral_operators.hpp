#pragma once

// Operators of the particle-in-a-box problem written in the Dirichlet
// eigenbasis of the unit reference box [-1/2, 1/2]:
//
//   phi_j(x) = sqrt(2) sin(j pi (x + 1/2)),   E_j = j^2 pi^2,
//
// with hbar = 1 and m = 1/2. All matrices are indexed from 0, so row k
// corresponds to mode j = k + 1.

#include <complex>
#include <string_view>

#include <Eigen/Dense>

namespace boxctrl {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Number of retained eigenmodes phi_1..phi_N.
class BasisTruncation {
 public:
  explicit BasisTruncation(int dim);
  int dim() const noexcept { return dim_; }

 private:
  int dim_;
};

/// Physical box [center - length/2, center + length/2].
class BoxGeometry {
 public:
  BoxGeometry(double length, double center);
  double length() const noexcept { return length_; }
  double center() const noexcept { return center_; }
  double left_wall() const noexcept { return center_ - 0.5 * length_; }
  double right_wall() const noexcept { return center_ + 0.5 * length_; }

  /// Unit box [-1/2, 1/2].
  static BoxGeometry reference() { return {1.0, 0.0}; }

  bool approx_equal(const BoxGeometry& other, double tol = 1e-12) const;

 private:
  double length_;
  double center_;
};

/// Wall motion ell(t) = ell0 + lambda f(t), d(t) = d0 + delta f(t) and the
/// bound r on the wall speed.
struct MotionParams {
  double lambda = 1.0;
  double delta = 1.0;
  double ell0 = 1.0;
  double d0 = 0.0;
  double rate_bound = 1.0;

  void validate() const;
  BoxGeometry geometry_at(double f) const;
  /// Upper bound on |f| keeping the box non-degenerate (infinite when lambda = 0).
  double f_limit() const;
};

/// Wavefunction coefficients on the eigenbasis of the box it is referenced to.
/// The coefficients on box (ell, d) equal the reference-box coefficients of
/// W_{ell,d} Phi, so a state never needs resampling when relabelled.
class SpectralState {
 public:
  SpectralState(ComplexVector coeffs, BoxGeometry geometry);

  /// phi_j (1-based) in a box of the given geometry.
  static SpectralState basis(int j, int dim, BoxGeometry geometry);

  const ComplexVector& coeffs() const noexcept { return coeffs_; }
  const BoxGeometry& geometry() const noexcept { return geometry_; }
  int dim() const noexcept { return static_cast<int>(coeffs_.size()); }
  double norm() const { return coeffs_.norm(); }

  /// Position-space value of the state at physical coordinate y.
  Complex evaluate(double y) const;

 private:
  ComplexVector coeffs_;
  BoxGeometry geometry_;
};

enum class OperatorKind { laplacian, momentum, dilation, interaction, hamiltonian };

std::string_view to_string(OperatorKind kind);

/// Dense Hermitian matrix in the truncated eigenbasis. Construction checks
/// A == A^dagger entry-wise to 1e-12 (relative).
class HermitianOperator {
 public:
  HermitianOperator(ComplexMatrix matrix, OperatorKind kind);

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  OperatorKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return static_cast<int>(matrix_.rows()); }

  /// max |A - A^dagger|
  double hermiticity_defect() const;

 private:
  ComplexMatrix matrix_;
  OperatorKind kind_;
};

/// sqrt(2) sin(j pi (x + 1/2)) on the reference box, zero outside.
double basis_function(int j, double x);

/// (j pi)^2 for j = 1..count.
RealVector dirichlet_eigenvalues(int count);

/// <phi_j, p phi_l> = i 2 j l [1 - (-1)^{j+l}] / (l^2 - j^2), zero on the diagonal.
/// Indices are 1-based and unbounded (used for out-of-basis couplings).
Complex momentum_element(int j, int l);

/// <phi_j, x o p phi_l> with x o p = (xp + px)/2:
/// i j l [1 + (-1)^{j+l}] / (j^2 - l^2), zero on the diagonal.
Complex dilation_element(int j, int l);

/// lambda <phi_j, x o p phi_l> + delta <phi_j, p phi_l>
Complex interaction_element(double lambda, double delta, int j, int l);

HermitianOperator laplacian_matrix(BasisTruncation n);
HermitianOperator momentum_matrix(BasisTruncation n);
HermitianOperator dilation_matrix(BasisTruncation n);

/// V = lambda x o p + delta p
HermitianOperator interaction_matrix(double lambda, double delta, BasisTruncation n);
HermitianOperator interaction_matrix(const MotionParams& params, BasisTruncation n);

/// Matrix of W_dst^dagger-compatible basis change: column j holds the
/// coefficients, on the eigenbasis of `dst`, of eigenfunction phi_j of `src`.
struct FrameMap {
  ComplexMatrix matrix;
  /// 1 - ||column j||^2, the probability leaking outside the truncated basis.
  RealVector column_deficiency;
};

FrameMap frame_map_coefficients(const BoxGeometry& src, const BoxGeometry& dst,
                                BasisTruncation n);

/// Re-express a state on another box at the same instant.
SpectralState map_to_frame(const SpectralState& state, const BoxGeometry& dst);

/// Projector onto even (sign = +1) or odd (sign = -1) wavefunctions.
/// phi_j is even for odd j and odd for even j.
RealMatrix parity_projector(int sign, BasisTruncation n);

}  // namespace boxctrl
