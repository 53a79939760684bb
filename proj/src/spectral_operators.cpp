#include "boxctrl/spectral_operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "boxctrl/errors.hpp"

namespace boxctrl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHermitianTol = 1e-12;

bool odd(long long k) { return (k % 2) != 0; }

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// Integral of cos(k y + phase) over [lo, hi], stable as k -> 0.
double integrate_cos(double k, double phase, double lo, double hi) {
  const double width = hi - lo;
  const double mid = 0.5 * (lo + hi);
  return width * std::cos(k * mid + phase) * sinc(0.5 * k * width);
}

}  // namespace

BasisTruncation::BasisTruncation(int dim) : dim_(dim) {
  if (dim < 2) {
    throw InvalidArgument("basis truncation needs at least 2 modes, got " + std::to_string(dim));
  }
}

BoxGeometry::BoxGeometry(double length, double center) : length_(length), center_(center) {
  if (!(length > 0.0) || !std::isfinite(length) || !std::isfinite(center)) {
    throw InvalidArgument("box length must be positive and finite, got " + std::to_string(length));
  }
}

bool BoxGeometry::approx_equal(const BoxGeometry& other, double tol) const {
  return std::abs(length_ - other.length_) <= tol * std::max(1.0, length_) &&
         std::abs(center_ - other.center_) <= tol * std::max(1.0, std::abs(center_));
}

void MotionParams::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("lambda must be >= 0");
  }
  if (!std::isfinite(delta)) throw InvalidArgument("delta must be finite");
  if (!(ell0 > 0.0) || !std::isfinite(ell0)) throw InvalidArgument("ell0 must be > 0");
  if (!std::isfinite(d0)) throw InvalidArgument("d0 must be finite");
  if (!(rate_bound > 0.0) || !std::isfinite(rate_bound)) {
    throw InvalidArgument("rate bound r must be > 0");
  }
}

BoxGeometry MotionParams::geometry_at(double f) const {
  return {ell0 + lambda * f, d0 + delta * f};
}

double MotionParams::f_limit() const {
  return lambda > 0.0 ? ell0 / lambda : std::numeric_limits<double>::infinity();
}

SpectralState::SpectralState(ComplexVector coeffs, BoxGeometry geometry)
    : coeffs_(std::move(coeffs)), geometry_(geometry) {
  if (coeffs_.size() == 0) throw InvalidArgument("state has no coefficients");
  if (!coeffs_.allFinite()) throw InvalidArgument("state coefficients must be finite");
}

SpectralState SpectralState::basis(int j, int dim, BoxGeometry geometry) {
  if (j < 1 || j > dim) {
    throw InvalidArgument("basis index " + std::to_string(j) + " outside 1.." + std::to_string(dim));
  }
  ComplexVector c = ComplexVector::Zero(dim);
  c(j - 1) = 1.0;
  return {std::move(c), geometry};
}

Complex SpectralState::evaluate(double y) const {
  const double x = (y - geometry_.center()) / geometry_.length();
  const double scale = 1.0 / std::sqrt(geometry_.length());
  Complex value = 0.0;
  for (int k = 0; k < dim(); ++k) value += coeffs_(k) * basis_function(k + 1, x);
  return scale * value;
}

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::laplacian: return "laplacian";
    case OperatorKind::momentum: return "momentum";
    case OperatorKind::dilation: return "dilation";
    case OperatorKind::interaction: return "interaction";
    case OperatorKind::hamiltonian: return "hamiltonian";
  }
  return "unknown";
}

HermitianOperator::HermitianOperator(ComplexMatrix matrix, OperatorKind kind)
    : matrix_(std::move(matrix)), kind_(kind) {
  if (matrix_.rows() != matrix_.cols()) throw InvalidArgument("operator matrix must be square");
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    for (Eigen::Index j = i; j < matrix_.cols(); ++j) {
      const Complex a = matrix_(i, j);
      const Complex b = std::conj(matrix_(j, i));
      if (std::abs(a - b) > kHermitianTol * std::max(1.0, std::abs(a))) {
        throw InvalidArgument(std::string(to_string(kind)) + " matrix is not Hermitian at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

double HermitianOperator::hermiticity_defect() const {
  return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
}

double basis_function(int j, double x) {
  if (x < -0.5 || x > 0.5) return 0.0;
  return std::sqrt(2.0) * std::sin(j * kPi * (x + 0.5));
}

RealVector dirichlet_eigenvalues(int count) {
  if (count < 1) throw InvalidArgument("eigenvalue count must be >= 1");
  RealVector e(count);
  for (int k = 0; k < count; ++k) {
    const double j = k + 1;
    e(k) = j * j * kPi * kPi;
  }
  return e;
}

Complex momentum_element(int j, int l) {
  if (j == l || !odd(static_cast<long long>(j) + l)) return 0.0;
  const double jd = j;
  const double ld = l;
  return {0.0, 4.0 * jd * ld / (ld * ld - jd * jd)};
}

Complex dilation_element(int j, int l) {
  if (j == l || odd(static_cast<long long>(j) + l)) return 0.0;
  const double jd = j;
  const double ld = l;
  return {0.0, 2.0 * jd * ld / (jd * jd - ld * ld)};
}

Complex interaction_element(double lambda, double delta, int j, int l) {
  return lambda * dilation_element(j, l) + delta * momentum_element(j, l);
}

namespace {

template <typename Element>
ComplexMatrix assemble(int n, Element element) {
  ComplexMatrix m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) m(r, c) = element(r + 1, c + 1);
  }
  return m;
}

}  // namespace

HermitianOperator laplacian_matrix(BasisTruncation n) {
  return {dirichlet_eigenvalues(n.dim()).cast<Complex>().asDiagonal(), OperatorKind::laplacian};
}

HermitianOperator momentum_matrix(BasisTruncation n) {
  return {assemble(n.dim(), momentum_element), OperatorKind::momentum};
}

HermitianOperator dilation_matrix(BasisTruncation n) {
  return {assemble(n.dim(), dilation_element), OperatorKind::dilation};
}

HermitianOperator interaction_matrix(double lambda, double delta, BasisTruncation n) {
  return {assemble(n.dim(),
                   [=](int j, int l) { return interaction_element(lambda, delta, j, l); }),
          OperatorKind::interaction};
}

HermitianOperator interaction_matrix(const MotionParams& params, BasisTruncation n) {
  params.validate();
  return interaction_matrix(params.lambda, params.delta, n);
}

FrameMap frame_map_coefficients(const BoxGeometry& src, const BoxGeometry& dst,
                                BasisTruncation n) {
  const int dim = n.dim();
  FrameMap out{ComplexMatrix::Zero(dim, dim), RealVector::Ones(dim)};

  const double lo = std::max(src.left_wall(), dst.left_wall());
  const double hi = std::min(src.right_wall(), dst.right_wall());
  if (hi <= lo) return out;

  // In physical coordinates the rescaled eigenfunctions are
  // sqrt(2/ell) sin(a y + b) with a = j pi / ell, b = j pi (1/2 - d/ell).
  const double norm = 1.0 / std::sqrt(src.length() * dst.length());
  for (int jc = 0; jc < dim; ++jc) {
    const double a = (jc + 1) * kPi / src.length();
    const double b = (jc + 1) * kPi * (0.5 - src.center() / src.length());
    for (int lr = 0; lr < dim; ++lr) {
      const double g = (lr + 1) * kPi / dst.length();
      const double k = (lr + 1) * kPi * (0.5 - dst.center() / dst.length());
      const double value =
          norm * (integrate_cos(a - g, b - k, lo, hi) - integrate_cos(a + g, b + k, lo, hi));
      out.matrix(lr, jc) = value;
    }
    out.column_deficiency(jc) = 1.0 - out.matrix.col(jc).squaredNorm();
  }
  return out;
}

SpectralState map_to_frame(const SpectralState& state, const BoxGeometry& dst) {
  if (state.geometry().approx_equal(dst)) return {state.coeffs(), dst};
  const FrameMap map = frame_map_coefficients(state.geometry(), dst, BasisTruncation(state.dim()));
  return {map.matrix * state.coeffs(), dst};
}

RealMatrix parity_projector(int sign, BasisTruncation n) {
  if (sign != 1 && sign != -1) throw InvalidArgument("parity sign must be +1 or -1");
  RealMatrix p = RealMatrix::Zero(n.dim(), n.dim());
  for (int k = 0; k < n.dim(); ++k) {
    const bool even_function = ((k + 1) % 2) == 1;
    if ((sign == 1) == even_function) p(k, k) = 1.0;
  }
  return p;
}

}  // namespace boxctrl
