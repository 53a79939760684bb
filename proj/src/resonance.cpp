#include "boxctrl/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "boxctrl/errors.hpp"

namespace boxctrl {

namespace {

constexpr double kPi = std::numbers::pi;

int tracked_count(const SpectrumOptions& options, int dim) {
  const int t = options.tracked > 0 ? options.tracked : dim / 2;
  if (t < 1 || t > dim) {
    throw InvalidArgument("tracked curve count must lie in 1.." + std::to_string(dim));
  }
  return t;
}

// Couplings <phi_l, V phi_k> from retained modes l <= N to dropped modes
// N < k <= tail_modes.
ComplexMatrix tail_coupling(const MotionParams& params, int dim, int tail_modes) {
  const int extra = std::max(0, tail_modes - dim);
  ComplexMatrix v(dim, extra);
  for (int l = 0; l < dim; ++l) {
    for (int k = 0; k < extra; ++k) {
      v(l, k) = interaction_element(params.lambda, params.delta, l + 1, dim + k + 1);
    }
  }
  return v;
}

}  // namespace

bool ResonanceReport::contains(const Quadruple& q) const {
  return std::find(quadruples.begin(), quadruples.end(), q) != quadruples.end();
}

ResonanceReport find_resonances_at_zero(BasisTruncation n, int max_index) {
  if (max_index < 2) throw InvalidArgument("max_index must be >= 2");
  if (max_index > n.dim()) throw InvalidArgument("max_index must not exceed N");
  ResonanceReport report;
  // Chain gaps (s+1)^2 - s^2 = 2s + 1 are odd, so only odd t2^2 - t1^2 can match.
  for (long long t1 = 1; t1 < max_index; ++t1) {
    for (long long t2 = t1 + 1; t2 <= max_index; ++t2) {
      const long long gap = t2 * t2 - t1 * t1;
      if (gap % 2 == 0) continue;
      const long long s = (gap - 1) / 2;
      if (s < 1 || s + 1 > max_index) continue;
      if (s == t1 && s + 1 == t2) continue;
      report.quadruples.push_back({static_cast<int>(s), static_cast<int>(s + 1),
                                   static_cast<int>(t1), static_cast<int>(t2)});
    }
  }
  std::sort(report.quadruples.begin(), report.quadruples.end(),
            [](const Quadruple& a, const Quadruple& b) {
              return std::tie(a.s1, a.t1, a.t2) < std::tie(b.s1, b.t1, b.t2);
            });
  return report;
}

SpectrumCurve spectrum_vs_eta(const MotionParams& params, const std::vector<double>& eta_grid,
                              BasisTruncation n, const SpectrumOptions& options) {
  params.validate();
  if (eta_grid.empty()) throw InvalidArgument("eta grid is empty");
  for (double eta : eta_grid) {
    if (!std::isfinite(eta)) throw InvalidArgument("eta grid must be finite");
  }
  const int dim = n.dim();
  const int tracked = tracked_count(options, dim);

  const ComplexMatrix lap = laplacian_matrix(n).matrix();
  const ComplexMatrix v = interaction_matrix(params, n).matrix();
  const ComplexMatrix tail =
      options.tail_modes > dim ? tail_coupling(params, dim, options.tail_modes) : ComplexMatrix();
  RealVector tail_energy(tail.cols());
  for (Eigen::Index k = 0; k < tail.cols(); ++k) {
    const double j = static_cast<double>(dim + k + 1);
    tail_energy(k) = j * j * kPi * kPi;
  }

  SpectrumCurve curve;
  curve.eta_grid = eta_grid;
  curve.eigenvalues.resize(static_cast<Eigen::Index>(eta_grid.size()), tracked);
  curve.eigenvectors.reserve(eta_grid.size());

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver;
  for (std::size_t g = 0; g < eta_grid.size(); ++g) {
    const double eta = eta_grid[g];
    solver.compute(lap + eta * v);
    if (solver.info() != Eigen::Success) throw Error("Hermitian eigensolver failed");
    const RealVector& values = solver.eigenvalues();
    const ComplexMatrix& vectors = solver.eigenvectors();

    std::vector<int> assign(tracked);
    if (g == 0) {
      for (int i = 0; i < tracked; ++i) assign[i] = i;
    } else {
      const ComplexMatrix& prev = curve.eigenvectors.back();
      const RealMatrix overlap = (prev.adjoint() * vectors).cwiseAbs();
      std::vector<bool> taken(dim, false);
      for (int i = 0; i < tracked; ++i) {
        Eigen::Index best = 0;
        const double top = overlap.row(i).maxCoeff(&best);
        double second = 0.0;
        for (int k = 0; k < dim; ++k) {
          if (k != best) second = std::max(second, overlap(i, k));
        }
        if (top - second < options.min_overlap_gap || taken[best]) {
          throw DegenerateMatching("ambiguous overlap matching for curve " + std::to_string(i + 1) +
                                   " between eta = " + std::to_string(eta_grid[g - 1]) +
                                   " and eta = " + std::to_string(eta) +
                                   "; refine the eta grid");
        }
        taken[best] = true;
        assign[i] = static_cast<int>(best);
      }
    }

    ComplexMatrix w(dim, tracked);
    for (int i = 0; i < tracked; ++i) {
      w.col(i) = vectors.col(assign[i]);
      curve.eigenvalues(static_cast<Eigen::Index>(g), i) = values(assign[i]);
    }
    if (tail.cols() > 0 && eta != 0.0) {
      // Second-order (Loewdin) shift from the dropped modes.
      const ComplexMatrix c = w.adjoint() * tail;
      for (int i = 0; i < tracked; ++i) {
        const double e = curve.eigenvalues(static_cast<Eigen::Index>(g), i);
        double shift = 0.0;
        for (Eigen::Index k = 0; k < tail.cols(); ++k) {
          shift += std::norm(c(i, k)) / (e - tail_energy(k));
        }
        curve.eigenvalues(static_cast<Eigen::Index>(g), i) += eta * eta * shift;
      }
    }
    curve.eigenvectors.push_back(std::move(w));
  }
  return curve;
}

double second_derivative_formula(const MotionParams& params, int j) {
  if (j < 1) throw InvalidArgument("mode index must be >= 1");
  const double l2 = params.lambda * params.lambda;
  const double jd = j;
  return l2 / (8.0 * jd * jd * kPi * kPi) - l2 / 48.0 - params.delta * params.delta / 4.0;
}

namespace {

RealVector symmetric_samples(const MotionParams& params, int j, BasisTruncation n, double h,
                             const SpectrumOptions& options) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  SpectrumOptions opt = options;
  opt.tracked = std::max(j, tracked_count(options, n.dim()));
  if (j > n.dim()) throw InvalidArgument("mode index exceeds the truncation");
  const SpectrumCurve c = spectrum_vs_eta(params, {0.0, h, -h}, n, opt);
  return c.eigenvalues.col(j - 1);
}

}  // namespace

double finite_difference_curvature(const MotionParams& params, int j, BasisTruncation n, double h,
                                   const SpectrumOptions& options) {
  const RealVector e = symmetric_samples(params, j, n, h, options);
  return (e(1) - 2.0 * e(0) + e(2)) / (2.0 * h * h);
}

double finite_difference_slope(const MotionParams& params, int j, BasisTruncation n, double h,
                               const SpectrumOptions& options) {
  const RealVector e = symmetric_samples(params, j, n, h, options);
  return (e(1) - e(2)) / (2.0 * h);
}

ChainCertificate certify_chain_at(const MotionParams& params, const SpectrumCurve& curve, int g,
                                  int max_index, double tol) {
  if (g < 0 || g >= static_cast<int>(curve.eta_grid.size())) {
    throw InvalidArgument("grid index out of range");
  }
  if (max_index < 2 || max_index > curve.tracked()) {
    throw InvalidArgument("max_index must lie in 2..tracked curves");
  }
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");

  const ComplexMatrix& w = curve.eigenvectors[g];
  const int dim = static_cast<int>(w.rows());
  const ComplexMatrix v = interaction_matrix(params, BasisTruncation(dim)).matrix();
  const ComplexMatrix w_head = w.leftCols(max_index);
  const RealMatrix coupling = (w_head.adjoint() * v * w_head).cwiseAbs();
  const RealVector e = curve.eigenvalues.row(g).head(max_index).transpose();

  ChainCertificate cert;
  cert.violations.eta = curve.eta_grid[g];
  cert.violations.tolerance = tol;
  for (int j = 0; j + 1 < max_index; ++j) {
    if (!(coupling(j, j + 1) > tol)) cert.weak_links.push_back(j + 1);
  }
  cert.connected = cert.weak_links.empty();

  for (int s = 0; s + 1 < max_index; ++s) {
    const double chain_gap = std::abs(e(s + 1) - e(s));
    for (int t1 = 0; t1 < max_index; ++t1) {
      for (int t2 = t1 + 1; t2 < max_index; ++t2) {
        if (t1 == s && t2 == s + 1) continue;
        if (!(coupling(t1, t2) > tol)) continue;
        if (std::abs(std::abs(e(t2) - e(t1)) - chain_gap) <= tol) {
          cert.violations.quadruples.push_back({s + 1, s + 2, t1 + 1, t2 + 1});
        }
      }
    }
  }
  cert.certified = cert.connected && cert.violations.quadruples.empty();
  return cert;
}

ChainCertificate certify_chain(const MotionParams& params, double eta, BasisTruncation n,
                               int max_index, double tol, const SpectrumOptions& options) {
  if (!std::isfinite(eta)) throw InvalidArgument("eta must be finite");
  if (2 * max_index > n.dim()) throw InvalidArgument("max_index must not exceed N / 2");
  SpectrumOptions opt = options;
  opt.tracked = std::max(max_index, tracked_count(options, n.dim()));
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(eta) / 0.02)));
  std::vector<double> grid(steps + 1);
  for (int i = 0; i <= steps; ++i) grid[i] = eta * i / steps;
  const SpectrumCurve curve = spectrum_vs_eta(params, grid, n, opt);
  return certify_chain_at(params, curve, steps, max_index, tol);
}

std::optional<double> scan_for_nonresonant_eta(const MotionParams& params, double eta_max,
                                               int grid_size, BasisTruncation n, int max_index,
                                               double tol, const SpectrumOptions& options) {
  if (!(eta_max > 0.0) || !std::isfinite(eta_max)) throw InvalidArgument("eta_max must be > 0");
  if (grid_size < 1) throw InvalidArgument("grid_size must be >= 1");
  if (2 * max_index > n.dim()) throw InvalidArgument("max_index must not exceed N / 2");
  SpectrumOptions opt = options;
  opt.tracked = std::max(max_index, tracked_count(options, n.dim()));
  std::vector<double> grid(grid_size + 1);
  for (int i = 0; i <= grid_size; ++i) grid[i] = eta_max * i / grid_size;
  const SpectrumCurve curve = spectrum_vs_eta(params, grid, n, opt);
  for (int g = 1; g <= grid_size; ++g) {
    if (certify_chain_at(params, curve, g, max_index, tol).certified) return grid[g];
  }
  return std::nullopt;
}

double gap_variation(const SpectrumCurve& curve, int count) {
  if (count < 1 || count > curve.tracked()) throw InvalidArgument("count out of range");
  double worst = 0.0;
  for (Eigen::Index g = 1; g < curve.eigenvalues.rows(); ++g) {
    for (int j = 0; j < count; ++j) {
      for (int k = j + 1; k < count; ++k) {
        const double now = curve.eigenvalues(g, j) - curve.eigenvalues(g, k);
        const double ref = curve.eigenvalues(0, j) - curve.eigenvalues(0, k);
        worst = std::max(worst, std::abs(now - ref));
      }
    }
  }
  return worst;
}

}  // namespace boxctrl
