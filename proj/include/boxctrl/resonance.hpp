#pragma once

// Spectrum of H(eta) = Lap + eta V on the truncated basis: integer resonances
// at eta = 0, eigenvalue curves tracked by eigenvector overlap, the closed
// form of the eta^2 coefficient, and non-resonance certificates for the
// chain of consecutive pairs (j, j+1).

#include <optional>
#include <vector>

#include "boxctrl/spectral_operators.hpp"

namespace boxctrl {

/// |E_{s2} - E_{s1}| = |E_{t2} - E_{t1}| with (s1, s2) a chain pair.
struct Quadruple {
  int s1 = 0;
  int s2 = 0;
  int t1 = 0;
  int t2 = 0;

  friend bool operator==(const Quadruple&, const Quadruple&) = default;
};

struct ResonanceReport {
  std::vector<Quadruple> quadruples;
  double eta = 0.0;
  double tolerance = 0.0;

  bool contains(const Quadruple& q) const;
};

/// Exact integer search over chain pairs (s, s+1) against every pair
/// t1 < t2 <= max_index, excluding (t1, t2) = (s, s+1).
ResonanceReport find_resonances_at_zero(BasisTruncation n, int max_index);

struct SpectrumOptions {
  /// Number of tracked curves; 0 means N / 2.
  int tracked = 0;
  /// Second-order correction from the modes N+1..tail_modes that the
  /// truncation drops; 0 disables it.
  int tail_modes = 4096;
  /// Matching fails when best and second-best overlaps differ by less.
  double min_overlap_gap = 0.1;
};

struct SpectrumCurve {
  std::vector<double> eta_grid;
  /// Row g, column j: eigenvalue of curve j + 1 at eta_grid[g].
  RealMatrix eigenvalues;
  /// Per grid point, the N x tracked matrix of eigenvectors of the curves.
  std::vector<ComplexMatrix> eigenvectors;

  int tracked() const { return static_cast<int>(eigenvalues.cols()); }
};

/// Diagonalize H(eta) at every grid point and continue the curves, in grid
/// order, by maximal eigenvector overlap. Curve labels are assigned by
/// sorting at the first grid point. Throws DegenerateMatching.
SpectrumCurve spectrum_vs_eta(const MotionParams& params, const std::vector<double>& eta_grid,
                              BasisTruncation n, const SpectrumOptions& options = {});

/// Closed form of the eta^2 Taylor coefficient of E_j(eta):
/// lambda^2 / (8 j^2 pi^2) - lambda^2 / 48 - delta^2 / 4.
double second_derivative_formula(const MotionParams& params, int j);

/// Same coefficient from the truncated spectrum:
/// (E_j(h) - 2 E_j(0) + E_j(-h)) / (2 h^2).
double finite_difference_curvature(const MotionParams& params, int j, BasisTruncation n,
                                   double h = 1e-3, const SpectrumOptions& options = {});

/// (E_j(h) - E_j(-h)) / (2 h)
double finite_difference_slope(const MotionParams& params, int j, BasisTruncation n,
                               double h = 1e-3, const SpectrumOptions& options = {});

struct ChainCertificate {
  bool certified = false;
  bool connected = false;
  /// Chain pairs (j, j+1) whose coupling does not exceed tol.
  std::vector<int> weak_links;
  ResonanceReport violations;
};

/// Checks (a) |<phi_j(eta), V phi_{j+1}(eta)>| > tol for j < max_index and
/// (b) no chain gap matches the gap of another coupled pair within tol.
/// Eigenvectors are labelled by continuation from eta = 0.
ChainCertificate certify_chain(const MotionParams& params, double eta, BasisTruncation n,
                               int max_index, double tol = 1e-8,
                               const SpectrumOptions& options = {});

/// Certificate at grid point g of an already computed spectrum.
ChainCertificate certify_chain_at(const MotionParams& params, const SpectrumCurve& curve, int g,
                                  int max_index, double tol);

/// Smallest eta_max * i / grid_size (i = 1..grid_size) that certifies, or
/// nullopt when none does.
std::optional<double> scan_for_nonresonant_eta(const MotionParams& params, double eta_max,
                                               int grid_size, BasisTruncation n, int max_index,
                                               double tol = 1e-8,
                                               const SpectrumOptions& options = {});

/// max over grid points and j, k <= count of
/// |(E_j(eta) - E_k(eta)) - (E_j(eta_0) - E_k(eta_0))|; zero for a uniform shift.
double gap_variation(const SpectrumCurve& curve, int count);

}  // namespace boxctrl
