#include <doctest.h>

#include <cmath>
#include <random>

#include "boxctrl/errors.hpp"
#include "boxctrl/propagation.hpp"
#include "oracles.hpp"

using namespace boxctrl;

namespace {

ComplexVector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexVector psi(n);
  for (int k = 0; k < n; ++k) psi(k) = Complex(g(rng), g(rng));
  return psi / psi.norm();
}

PiecewiseControl random_constant(int segs, double horizon, double r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-r, r);
  std::vector<double> v(segs);
  for (double& x : v) x = u(rng);
  return PiecewiseControl::uniform_constant(horizon, v);
}

// i psi' = [ell^-2 Lap - (fdot / ell) V] psi with ell = ell0 + lambda f.
Eigen::MatrixXcd transformed_h(const MotionParams& p, const Eigen::MatrixXcd& lap,
                               const Eigen::MatrixXcd& v, double f, double fdot) {
  const double ell = p.ell0 + p.lambda * f;
  return lap / (ell * ell) - (fdot / ell) * v;
}

}  // namespace

TEST_SUITE("propagation") {

TEST_CASE("piecewise controls") {
  const PiecewiseControl v = PiecewiseControl::constant({0.0, 1.0, 3.0}, {0.5, -0.25});
  CHECK(v.segment_count() == 2);
  CHECK(v.segment_at(0.0) == 0);
  CHECK(v.segment_at(1.0) == 1);
  CHECK(v.segment_at(3.0) == 1);
  CHECK(v.rate(1) == -0.25);
  CHECK(v.max_abs_rate() == 0.5);
  CHECK_THROWS_AS(PiecewiseControl::constant({0.0, 1.0}, {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(PiecewiseControl::constant({1.0, 0.0}, {1.0}), InvalidArgument);

  const PiecewiseControl f = PiecewiseControl::linear({0.0, 1.0, 2.0}, {{0.0, 1.0}, {1.0, -2.0}});
  CHECK(f.f_at(0.5) == doctest::Approx(0.5));
  CHECK(f.f_at(1.5) == doctest::Approx(0.0));
  CHECK(f.f_segment_end(1) == doctest::Approx(-1.0));
  CHECK(f.max_abs_f() == doctest::Approx(1.0));
  CHECK(f.max_abs_f(1.2) == doctest::Approx(1.0));
  const PiecewiseControl g = f.then(PiecewiseControl::linear({2.0, 3.0}, {{-1.0, 1.0}}));
  CHECK(g.end() == 3.0);
  CHECK(g.f_at(3.0) == doctest::Approx(0.0));

  const PiecewiseControl zero;
  CHECK(zero.duration() == 1.0);
  CHECK(zero.rate(0) == 0.0);
}

TEST_CASE("segment exponential equals Eigen's matrix exponential") {
  const MotionParams p{0.8, 0.6, 1.3, 0.0, 2.0};
  const AuxiliarySystem aux(p, BasisTruncation(10));
  const ComplexMatrix h = aux.hamiltonian(0.7).matrix();
  const ComplexMatrix ours = aux.exponential(0.7, 0.37);
  CHECK((ours - oracle::expm(h, 0.37)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("auxiliary propagation matches Dormand-Prince for N <= 8") {
  std::mt19937_64 rng(11);
  for (int n : {4, 8}) {
    const MotionParams p{1.0, 1.0, 1.0, 0.0, 1.0};
    const PiecewiseControl v = random_constant(5, 0.4, 0.9, rng);
    const ComplexVector psi0 = random_state(n, rng);
    const Eigen::MatrixXcd lap = oracle::laplacian(n);
    const Eigen::MatrixXcd vm = oracle::interaction(p.lambda, p.delta, n);
    const auto h = [&](double t) -> Eigen::MatrixXcd {
      return lap / (p.ell0 * p.ell0) - (v.rate(v.segment_at(t)) / p.ell0) * vm;
    };
    const ComplexVector ref = oracle::schrodinger(h, psi0, 0.0, 0.4, v.breakpoints());
    const ComplexVector ours = propagate_auxiliary(p, BasisTruncation(n), v, 0.0, 0.4).apply(psi0);
    CHECK((ours - ref).norm() < 1e-7);
  }
}

TEST_CASE("transformed propagation matches Dormand-Prince") {
  std::mt19937_64 rng(5);
  const int n = 6;
  const MotionParams p{1.0, 0.5, 1.0, 0.0, 1.0};
  const PiecewiseControl f =
      PiecewiseControl::linear({0.0, 0.15, 0.3}, {{0.0, 0.8}, {0.12, -0.6}});
  const ComplexVector psi0 = random_state(n, rng);
  const Eigen::MatrixXcd lap = oracle::laplacian(n);
  const Eigen::MatrixXcd vm = oracle::interaction(p.lambda, p.delta, n);
  const auto h = [&](double t) -> Eigen::MatrixXcd {
    const int k = f.segment_at(t);
    return transformed_h(p, lap, vm, f.f_on_segment(k, t), f.rate(k));
  };
  const ComplexVector ref = oracle::schrodinger(h, psi0, 0.0, 0.3, f.breakpoints());
  const ComplexVector ours =
      propagate_transformed(p, BasisTruncation(n), f, 0.0, 0.3, 2e-5).apply(psi0);
  CHECK((ours - ref).norm() < 1e-6);
}

TEST_CASE("midpoint rule is second order") {
  // Deviation from the Richardson extrapolation of the two finest runs.
  const MotionParams p{1.0, 1.0, 1.0, 0.0, 1.0};
  const PiecewiseControl f = PiecewiseControl::linear({0.0, 0.5}, {{0.0, 0.9}});
  const BasisTruncation n(8);
  const double h = 0.5 / 16;
  const ComplexMatrix u1 = propagate_transformed(p, n, f, 0.0, 0.5, h).matrix;
  const ComplexMatrix u2 = propagate_transformed(p, n, f, 0.0, 0.5, h / 2).matrix;
  const ComplexMatrix u4 = propagate_transformed(p, n, f, 0.0, 0.5, h / 4).matrix;
  const ComplexMatrix rich = (4.0 * u4 - u2) / 3.0;
  const double ratio = (u1 - rich).norm() / (u2 - rich).norm();
  MESSAGE("error ratio on halving h: " << ratio);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("propagators are unitary and conserve the norm") {
  std::mt19937_64 rng(3);
  const MotionParams p{1.0, 1.0, 1.0, 0.0, 2.0};
  const BasisTruncation n(16);
  for (int rep = 0; rep < 3; ++rep) {
    const PiecewiseControl v = random_constant(20, 2.0, 1.9, rng);
    const Propagator ua = propagate_auxiliary(p, n, v, 0.0, 2.0);
    CHECK(ua.unitarity_defect() <= 1e-9);
    const PiecewiseControl f =
        PiecewiseControl::linear({0.0, 0.7, 1.5}, {{0.0, 0.5}, {0.35, -1.2}});
    const Propagator ut = propagate_transformed(p, n, f, 0.0, 1.5, 0.01);
    CHECK(ut.unitarity_defect() <= 1e-9);
    const ComplexVector psi = random_state(16, rng);
    CHECK(std::abs(ua.apply(psi).norm() - 1.0) <= 1e-9);
    CHECK(std::abs(ut.apply(psi).norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("delta = 0 keeps the parity sectors apart") {
  std::mt19937_64 rng(17);
  const MotionParams p{1.0, 0.0, 1.0, 0.0, 1.0};
  const BasisTruncation n(32);
  const RealMatrix odd = parity_projector(-1, n);
  ComplexVector psi = ComplexVector::Zero(32);
  for (int k = 0; k < 32; k += 2) psi(k) = Complex(1.0 / (k + 1), 0.3 / (k + 1));
  psi /= psi.norm();
  const PiecewiseControl v = random_constant(20, 3.0, 0.99, rng);
  const ComplexVector out = propagate_auxiliary(p, n, v, 0.0, 3.0).apply(psi);
  CHECK((odd.cast<Complex>() * out).squaredNorm() <= 1e-10);
}

TEST_CASE("evolution at rest only adds phases") {
  const MotionParams p{1.0, 1.0, 1.3, 0.2, 1.0};
  const PiecewiseControl f = PiecewiseControl::linear({0.0, 0.8}, {{0.0, 0.0}});
  ComplexVector c = ComplexVector::Zero(5);
  c(0) = 0.6;
  c(3) = Complex(0.0, 0.8);
  const SpectralState s0(c, BoxGeometry(1.3, 0.2));
  const SpectralState s1 = evolve_moving_box(p, f, s0, 0.01);
  for (int k = 0; k < 5; ++k) {
    const double e = (k + 1) * (k + 1) * oracle::pi * oracle::pi / (1.3 * 1.3);
    CHECK(std::abs(s1.coeffs()(k) - std::exp(Complex(0.0, -e * 0.8)) * c(k)) < 1e-12);
  }
  CHECK(s1.geometry().approx_equal(BoxGeometry(1.3, 0.2)));
}

TEST_CASE("evolve_moving_box relabels the final geometry") {
  const MotionParams p{1.0, 0.5, 1.0, 0.0, 1.0};
  const PiecewiseControl f = PiecewiseControl::linear({0.0, 1.0}, {{0.0, 0.5}});
  const SpectralState s = evolve_moving_box(p, f, SpectralState::basis(1, 8, BoxGeometry(1.0, 0.0)),
                                            0.01);
  CHECK(s.geometry().length() == doctest::Approx(1.5));
  CHECK(s.geometry().center() == doctest::Approx(0.25));
  CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("collapsing boxes are rejected") {
  const MotionParams p{1.0, 0.0, 1.0, 0.0, 5.0};
  const PiecewiseControl f = PiecewiseControl::linear({0.0, 1.0}, {{0.0, -1.5}});
  const TransformedSystem sys(p, BasisTruncation(4));
  CHECK_THROWS_AS(sys.check_admissible(f), WallCollision);
  CHECK_THROWS_AS(sys.hamiltonian(-1.0, 0.0), WallCollision);
}

TEST_CASE("form norms") {
  ComplexVector psi = ComplexVector::Zero(3);
  psi(1) = 1.0;
  const double e2 = 4 * oracle::pi * oracle::pi;
  CHECK(minus_norm(psi) == doctest::Approx(1.0 / std::sqrt(e2 + 1.0)));
  CHECK(plus_norm(psi) == doctest::Approx(std::sqrt(e2 + 1.0)));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const ComplexVector x = random_state(12, rng);
    CHECK(minus_norm(x) <= x.norm() + 1e-15);
    CHECK(x.norm() <= plus_norm(x) + 1e-15);
  }
}

}  // TEST_SUITE
