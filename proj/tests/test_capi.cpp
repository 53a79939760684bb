#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "boxctrl/boxctrl.h"
#include "oracles.hpp"

TEST_SUITE("capi") {

TEST_CASE("version and status names") {
  CHECK(std::string(boxctrl_version()) == "0.1.0");
  CHECK(std::string(boxctrl_status_name(BOXCTRL_OK)) == "ok");
  CHECK(std::string(boxctrl_status_name(BOXCTRL_ERR_UNSUPPORTED_MOTION)) == "unsupported motion");
}

TEST_CASE("errors become status codes with a per-thread message") {
  std::vector<double> out(8);
  CHECK(boxctrl_operator_matrix(BOXCTRL_OP_MOMENTUM, nullptr, 0, out.data()) ==
        BOXCTRL_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(boxctrl_last_error()) > 0);
  CHECK(boxctrl_operator_matrix(BOXCTRL_OP_MOMENTUM, nullptr, 2, out.data()) == BOXCTRL_OK);
  CHECK(boxctrl_operator_matrix(BOXCTRL_OP_INTERACTION, nullptr, 2, out.data()) ==
        BOXCTRL_ERR_INVALID_ARGUMENT);
  CHECK(boxctrl_operator_matrix(BOXCTRL_OP_MOMENTUM, nullptr, 2, nullptr) ==
        BOXCTRL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("operator matrix layout") {
  const int n = 4;
  std::vector<double> m(2 * n * n);
  boxctrl_motion motion;
  boxctrl_motion_init(&motion);
  motion.lambda = 0.5;
  motion.delta = 2.0;
  REQUIRE(boxctrl_operator_matrix(BOXCTRL_OP_INTERACTION, &motion, n, m.data()) == BOXCTRL_OK);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const oracle::cplx ref =
          0.5 * oracle::dilation(r + 1, c + 1, 20) + 2.0 * oracle::momentum(r + 1, c + 1, 20);
      CHECK(m[2 * (r * n + c)] == doctest::Approx(ref.real()).scale(1.0));
      CHECK(m[2 * (r * n + c) + 1] == doctest::Approx(ref.imag()).scale(1.0));
    }
  }
}

TEST_CASE("auxiliary propagator is unitary through the C API") {
  boxctrl_motion motion;
  boxctrl_motion_init(&motion);
  const int n = 6;
  const double bp[] = {0.0, 0.5, 1.0};
  const double v[] = {0.4, -0.7};
  std::vector<double> u(2 * n * n);
  REQUIRE(boxctrl_propagate_auxiliary(&motion, n, bp, v, 2, 0.0, 1.0, u.data()) == BOXCTRL_OK);
  Eigen::MatrixXcd um(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) um(r, c) = {u[2 * (r * n + c)], u[2 * (r * n + c) + 1]};
  }
  CHECK((um.adjoint() * um - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);

  const double offsets[] = {0.0, 0.2};
  const double slopes[] = {0.4, -0.7};
  REQUIRE(boxctrl_propagate_transformed(&motion, n, bp, offsets, slopes, 2, 0.0, 1.0, 0.01,
                                        u.data()) == BOXCTRL_OK);
  const double bad_slopes[] = {0.4, -3.0};  // ell crosses zero
  CHECK(boxctrl_propagate_transformed(&motion, n, bp, offsets, bad_slopes, 2, 0.0, 1.0, 0.01,
                                      u.data()) != BOXCTRL_OK);
}

TEST_CASE("transfer lifecycle") {
  const int dim = 6;
  std::vector<double> ground(2 * dim, 0.0);
  ground[0] = 1.0;
  boxctrl_transfer_config cfg;
  boxctrl_transfer_config_init(&cfg);
  cfg.dim = dim;
  cfg.ell0 = 1.0;
  cfg.d0 = 0.0;
  cfg.ell1 = 1.0;
  cfg.d1 = 0.4;
  cfg.initial = ground.data();
  cfg.target = ground.data();
  cfg.epsilon = 0.3;
  cfg.rate_bound = 2.0;
  boxctrl_transfer_result* result = nullptr;
  CHECK(boxctrl_transfer_solve(&cfg, &result) == BOXCTRL_ERR_UNSUPPORTED_MOTION);
  CHECK(result == nullptr);
  CHECK(std::string(boxctrl_last_error()).find("open problem") != std::string::npos);

  cfg.ell1 = 1.5;
  cfg.d1 = 0.0;
  const int segs[] = {10};
  cfg.segment_schedule = segs;
  cfg.segment_schedule_len = 1;
  REQUIRE(boxctrl_transfer_solve(&cfg, &result) == BOXCTRL_OK);
  boxctrl_transfer_summary s;
  REQUIRE(boxctrl_transfer_result_summary(result, &s) == BOXCTRL_OK);
  CHECK(s.achieved_error < 0.3);
  CHECK(s.final_length == doctest::Approx(1.5));
  CHECK(s.starts_at_zero);
  CHECK(s.reaches_final_value);
  std::vector<double> bp(s.control_segments + 1);
  REQUIRE(boxctrl_transfer_result_breakpoints(result, bp.data()) == BOXCTRL_OK);
  CHECK(bp.front() == 0.0);
  CHECK(bp.back() == doctest::Approx(s.duration));
  double v = 0, f = 0, ell = 0, d = 0;
  REQUIRE(boxctrl_transfer_result_sample(result, s.duration, &v, &f, &ell, &d) == BOXCTRL_OK);
  CHECK(ell == doctest::Approx(1.5));
  CHECK(d == doctest::Approx(0.0));
  const double times[] = {0.0, 0.5 * s.duration, s.duration};
  std::vector<double> pops(3 * dim);
  REQUIRE(boxctrl_transfer_result_trajectory(result, times, 3, pops.data()) == BOXCTRL_OK);
  CHECK(pops[0] == doctest::Approx(1.0));
  double total = 0.0;
  for (int j = 0; j < dim; ++j) total += pops[2 * dim + j];
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  // Ground state of the final box: population equals fidelity squared.
  CHECK(pops[2 * dim] == doctest::Approx(s.fidelity * s.fidelity).epsilon(1e-9));
  const double backwards[] = {1.0, 0.5};
  CHECK(boxctrl_transfer_result_trajectory(result, backwards, 2, pops.data()) ==
        BOXCTRL_ERR_INVALID_ARGUMENT);
  boxctrl_transfer_result_free(result);
  boxctrl_transfer_result_free(nullptr);
}

TEST_CASE("resonance entry points") {
  int count = 0;
  REQUIRE(boxctrl_resonances_at_zero(221, 221, nullptr, 0, &count) == BOXCTRL_OK);
  std::vector<boxctrl_quadruple> q(count);
  REQUIRE(boxctrl_resonances_at_zero(221, 221, q.data(), count, &count) == BOXCTRL_OK);
  bool found = false;
  for (const auto& x : q) found |= x.s1 == 220 && x.s2 == 221 && x.t1 == 20 && x.t2 == 29;
  CHECK(found);

  boxctrl_motion motion;
  boxctrl_motion_init(&motion);
  motion.lambda = 0.0;
  double eta = -1.0;
  CHECK(boxctrl_scan_nonresonant(&motion, 0.5, 5, 64, 30, 1e-8, nullptr, &eta) ==
        BOXCTRL_ERR_NOT_FOUND);
  CHECK(eta == -1.0);

  motion.lambda = 1.0;
  double formula = 0.0, fd = 0.0;
  REQUIRE(boxctrl_second_derivative_formula(&motion, 2, &formula) == BOXCTRL_OK);
  REQUIRE(boxctrl_finite_difference_curvature(&motion, 2, 64, 1e-3, nullptr, &fd) == BOXCTRL_OK);
  CHECK(std::abs(formula - fd) < 1e-4);

  boxctrl_certificate cert;
  std::vector<boxctrl_quadruple> viol(64);
  REQUIRE(boxctrl_certify_chain(&motion, 0.0, 64, 30, 1e-8, nullptr, &cert, viol.data(), 64) ==
          BOXCTRL_OK);
  CHECK(cert.connected);
  CHECK_FALSE(cert.certified);
  CHECK(cert.violation_count > 0);
}

TEST_CASE("stability entry points") {
  boxctrl_motion motion;
  boxctrl_motion_init(&motion);
  const double bp[] = {0.0, 0.5, 1.0, 1.5, 2.0};
  const double v[] = {0.8, -0.6, 0.5, -0.9};
  const int n_list[] = {8, 16};
  boxctrl_stability_constants k;
  REQUIRE(boxctrl_stability_constants_for(&motion, bp, v, 4, n_list, 2, 0.5, &k) == BOXCTRL_OK);
  CHECK(k.L >= 1.0);
  CHECK(boxctrl_stability_constants_for(&motion, bp, v, 4, n_list, 2, 1.5, &k) ==
        BOXCTRL_ERR_INVALID_ARGUMENT);

  std::vector<double> psi(32, 0.0);
  psi[0] = 1.0;
  int count = 0;
  REQUIRE(boxctrl_stability_bound(&motion, bp, v, 4, 8, 0, psi.data(), 16, 0.5, nullptr, 0,
                                  &count) == BOXCTRL_OK);
  std::vector<boxctrl_segment_bound> rows(count);
  REQUIRE(boxctrl_stability_bound(&motion, bp, v, 4, 8, 0, psi.data(), 16, 0.5, rows.data(),
                                  count, &count) == BOXCTRL_OK);
  for (const auto& r : rows) CHECK(r.lhs <= r.rhs);

  double errors[2], slope = 0.0;
  REQUIRE(boxctrl_lifting_convergence(&motion, bp, v, 4, psi.data(), 16, n_list, 2, 0.0, errors,
                                      &slope) == BOXCTRL_OK);
  CHECK(errors[1] < errors[0]);

  double mb = 0, db = 0;
  REQUIRE(boxctrl_form_bounds(0.5, &mb, &db) == BOXCTRL_OK);
  CHECK(mb == doctest::Approx(0.5));
  CHECK(db == doctest::Approx(0.125));
}

}  // TEST_SUITE
