#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "boxctrl/errors.hpp"
#include "boxctrl/resonance.hpp"
#include "oracles.hpp"

using namespace boxctrl;

TEST_SUITE("resonance") {

TEST_CASE("integer search equals brute force up to 50") {
  for (int m : {10, 30, 50}) {
    const ResonanceReport r = find_resonances_at_zero(BasisTruncation(m), m);
    std::vector<std::tuple<int, int, int, int>> ours;
    for (const Quadruple& q : r.quadruples) ours.emplace_back(q.s1, q.s2, q.t1, q.t2);
    auto ref = oracle::quadruples(m);
    std::sort(ours.begin(), ours.end());
    std::sort(ref.begin(), ref.end());
    CHECK(ours == ref);
  }
}

TEST_CASE("the paper's example 220 221 20 29") {
  const ResonanceReport r = find_resonances_at_zero(BasisTruncation(221), 221);
  CHECK(r.contains({220, 221, 20, 29}));
  CHECK(221 * 221 - 220 * 220 == 29 * 29 - 20 * 20);
  const ResonanceReport small = find_resonances_at_zero(BasisTruncation(220), 220);
  CHECK_FALSE(small.contains({220, 221, 20, 29}));
}

TEST_CASE("eta = 0 spectrum is j^2 pi^2") {
  const MotionParams p{1.0, 1.0, 1.0, 0.0, 1.0};
  const SpectrumCurve c = spectrum_vs_eta(p, {0.0}, BasisTruncation(16));
  CHECK(c.tracked() == 8);
  for (int j = 1; j <= 8; ++j) {
    CHECK(c.eigenvalues(0, j - 1) == doctest::Approx(j * j * oracle::pi * oracle::pi));
  }
}

TEST_CASE("truncated spectrum agrees with dense diagonalisation of the quadrature matrix") {
  const MotionParams p{0.8, 0.4, 1.0, 0.0, 1.0};
  const int n = 24;
  const double eta = 0.3;
  SpectrumOptions o;
  o.tail_modes = 0;
  const SpectrumCurve c = spectrum_vs_eta(p, {0.0, 0.1, 0.2, eta}, BasisTruncation(n), o);
  const Eigen::MatrixXcd h = oracle::laplacian(n) + eta * oracle::interaction(0.8, 0.4, n);
  const Eigen::VectorXd e = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h).eigenvalues();
  for (int j = 0; j < 6; ++j) CHECK(c.eigenvalues(3, j) == doctest::Approx(e(j)).epsilon(1e-12));
}

TEST_CASE("curvature formula against finite differences") {
  for (double lambda : {0.0, 0.5, 1.0}) {
    for (double delta : {0.0, 0.5, 1.0}) {
      const MotionParams p{lambda, delta, 1.0, 0.0, 1.0};
      for (int j = 1; j <= 5; ++j) {
        const double fd = finite_difference_curvature(p, j, BasisTruncation(64));
        CHECK(std::abs(fd - second_derivative_formula(p, j)) < 1e-4);
      }
      CHECK(std::abs(finite_difference_slope(p, 2, BasisTruncation(64))) < 1e-8);
    }
  }
  const MotionParams p{1.0, 1.0, 1.0, 0.0, 1.0};
  CHECK(second_derivative_formula(p, 1) ==
        doctest::Approx(1.0 / (8 * oracle::pi * oracle::pi) - 1.0 / 48 - 0.25));
}

TEST_CASE("lambda = 0 shifts the whole spectrum by -delta^2 eta^2 / 4") {
  const MotionParams p{0.0, 1.0, 1.0, 0.0, 1.0};
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.05 * i);
  const SpectrumCurve c = spectrum_vs_eta(p, grid, BasisTruncation(64));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (int j = 1; j <= 5; ++j) {
      const double expected = j * j * oracle::pi * oracle::pi - grid[g] * grid[g] / 4.0;
      CHECK(std::abs(c.eigenvalues(g, j - 1) - expected) < 1e-6);
    }
  }
  CHECK(gap_variation(c, 5) < 1e-6);
  CHECK_FALSE(scan_for_nonresonant_eta(p, 0.5, 10, BasisTruncation(64), 30).has_value());
}

TEST_CASE("chain certificates") {
  const MotionParams p{1.0, 1.0, 1.0, 0.0, 1.0};
  // At eta = 0 the integer resonances of the first 30 levels are present.
  const ChainCertificate c0 = certify_chain(p, 0.0, BasisTruncation(64), 30);
  CHECK(c0.connected);
  CHECK_FALSE(c0.certified);
  const ResonanceReport r0 = find_resonances_at_zero(BasisTruncation(30), 30);
  for (const Quadruple& q : r0.quadruples) CHECK(c0.violations.contains(q));

  const auto eta = scan_for_nonresonant_eta(p, 0.1, 50, BasisTruncation(64), 30);
  REQUIRE(eta.has_value());
  CHECK(*eta > 0.0);
  const ChainCertificate c1 = certify_chain(p, *eta, BasisTruncation(64), 30);
  CHECK(c1.certified);
  CHECK(c1.violations.quadruples.empty());

  // x o p alone has no chain of consecutive pairs.
  const MotionParams dil{1.0, 0.0, 1.0, 0.0, 1.0};
  const ChainCertificate cd = certify_chain(dil, 0.0, BasisTruncation(32), 10);
  CHECK_FALSE(cd.connected);
  CHECK(cd.weak_links.size() == 9);

  CHECK_THROWS_AS(certify_chain(p, 0.1, BasisTruncation(20), 11), InvalidArgument);
}

TEST_CASE("overlap matching refuses ambiguous steps") {
  const MotionParams p{1.0, 1.0, 1.0, 0.0, 1.0};
  SpectrumOptions o;
  o.min_overlap_gap = 0.999999;
  CHECK_THROWS_AS(spectrum_vs_eta(p, {0.0, 3.0}, BasisTruncation(16), o), DegenerateMatching);
}

}  // TEST_SUITE
