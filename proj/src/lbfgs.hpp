#pragma once

// Compact limited-memory BFGS with Armijo backtracking. Internal helper for
// the control synthesizer; not part of the public headers.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace boxctrl::detail {

struct LbfgsOptions {
  int max_iterations = 300;
  int memory = 10;
  double gradient_tol = 1e-10;
  /// Stop as soon as the objective drops to this value.
  double target_value = -std::numeric_limits<double>::infinity();
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

/// Minimizes fg, where fg(x, grad) returns the value and fills the gradient.
template <typename Objective>
LbfgsResult lbfgs_minimize(Objective&& fg, Eigen::VectorXd x, const LbfgsOptions& opt) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n);
  double fx = fg(x, g);

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (fx <= opt.target_value || g.lpNorm<Eigen::Infinity>() < opt.gradient_tol) break;

    // Two-loop recursion for d = -H g.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd d = -q;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    if (s_hist.empty()) step = std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>());
    Eigen::VectorXd x_new(n);
    Eigen::VectorXd g_new(n);
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + step * d;
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double decrease = fx - f_new;
    x = std::move(x_new);
    g = std::move(g_new);
    fx = f_new;
    if (decrease <= 1e-15 * std::max(1.0, std::abs(fx))) break;
  }
  return {std::move(x), fx, it};
}

}  // namespace boxctrl::detail
