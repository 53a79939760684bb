#include "boxctrl/stability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "boxctrl/control.hpp"
#include "boxctrl/errors.hpp"

namespace boxctrl {

namespace {

constexpr int kNu = 1;  // number of perturbing operators (V only)
constexpr int kGaussOrder = 16;

struct GaussRule {
  std::array<double, kGaussOrder> x{};
  std::array<double, kGaussOrder> w{};
};

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_n.
const GaussRule& gauss_rule() {
  static const GaussRule rule = [] {
    GaussRule r;
    const int n = kGaussOrder;
    for (int i = 0; i < n; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      r.x[i] = z;
      r.w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return r;
  }();
  return rule;
}

double gauss(const std::function<double(double)>& g, double a, double b) {
  const GaussRule& r = gauss_rule();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (int i = 0; i < kGaussOrder; ++i) s += r.w[i] * g(mid + half * r.x[i]);
  return half * s;
}

// Integral of |g| over [a, b] for a smooth g: sign changes located on a
// sampling grid are resolved by bisection and each sign-definite piece is
// integrated separately.
double abs_integral(const std::function<double(double)>& g, double a, double b) {
  if (!(b > a)) return 0.0;
  constexpr int kPanels = 32;
  std::vector<double> cuts{a};
  double prev_t = a;
  double prev_g = g(a);
  for (int i = 1; i <= kPanels; ++i) {
    const double t = i == kPanels ? b : a + (b - a) * i / kPanels;
    const double gt = g(t);
    if ((prev_g < 0.0 && gt > 0.0) || (prev_g > 0.0 && gt < 0.0)) {
      double lo = prev_t;
      double hi = t;
      double glo = prev_g;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double m = 0.5 * (lo + hi);
        const double gm = g(m);
        if ((glo < 0.0) == (gm < 0.0)) {
          lo = m;
          glo = gm;
        } else {
          hi = m;
        }
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    cuts.push_back(t);
    prev_t = t;
    prev_g = gt;
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    total += std::abs(gauss(g, cuts[k], cuts[k + 1]));
  }
  return total;
}

std::vector<double> merged_breakpoints(const std::vector<const PiecewiseControl*>& controls,
                                       double a, double b) {
  std::vector<double> bp{a, b};
  for (const PiecewiseControl* c : controls) {
    for (double t : c->breakpoints()) {
      if (t > a && t < b) bp.push_back(t);
    }
  }
  std::sort(bp.begin(), bp.end());
  const double merge = 1e-12 * std::max(1.0, std::abs(b));
  std::vector<double> out{bp.front()};
  for (double t : bp) {
    if (t - out.back() > merge) out.push_back(t);
  }
  out.back() = b;
  return out;
}

// Box length and wall speed of a member on the segment containing the midpoint.
struct Coefficients {
  double ell;
  double speed;
};

Coefficients member_state(const MotionParams& p, const PiecewiseControl& c, int seg, double t) {
  if (c.kind() == ControlKind::constant) return {p.ell0, c.rate(seg)};
  return {p.ell0 + p.lambda * c.f_on_segment(seg, t), c.rate(seg)};
}

double coefficient_value(const Coefficients& s, int i) {
  return i == 0 ? 1.0 / (s.ell * s.ell) : -s.speed / s.ell;
}

}  // namespace

FormBounds form_bound_constants(double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be > 0");
  return {{epsilon, 1.0 / (4.0 * epsilon)}, {epsilon, 1.0 / (16.0 * epsilon)}};
}

double interaction_form_offset(double lambda, double delta, double e) {
  if (!(e > 0.0)) throw InvalidArgument("relative bound must be > 0");
  const double s = 0.25 * std::abs(lambda) + 0.5 * std::abs(delta);
  return s * s / e;
}

void CoefficientFamily::validate() const {
  params.validate();
  if (members.empty()) throw InvalidArgument("coefficient family has no members");
  if (!(t_to > t_from)) throw InvalidArgument("family interval must have positive length");
  for (const PiecewiseControl& c : members) {
    const double slack = 1e-12 * std::max(1.0, std::abs(t_to));
    if (c.start() > t_from + slack || c.end() < t_to - slack) {
      throw InvalidArgument("family member does not cover the interval");
    }
    for (int k = 0; k < c.segment_count(); ++k) {
      for (double t : {c.segment_begin(k), c.segment_end(k)}) {
        if (!(member_state(params, c, k, t).ell > 0.0)) {
          throw InvalidArgument("leading coefficient is not positive (mu <= 0)");
        }
      }
    }
  }
}

double CoefficientFamily::coefficient(int k, int i, double t) const {
  const PiecewiseControl& c = members.at(k);
  return coefficient_value(member_state(params, c, c.segment_at(t), t), i);
}

namespace {

// Calls visit(seg, lo, hi) for the parts of member c inside [a, b].
template <typename Visit>
void for_each_piece(const PiecewiseControl& c, double a, double b, Visit visit) {
  for (int k = 0; k < c.segment_count(); ++k) {
    const double lo = std::max(a, c.segment_begin(k));
    const double hi = std::min(b, c.segment_end(k));
    if (hi > lo) visit(k, lo, hi);
  }
}

}  // namespace

double CoefficientFamily::derivative_l1() const {
  double worst = 0.0;
  for (const PiecewiseControl& c : members) {
    for (int i = 0; i <= kNu; ++i) {
      double total = 0.0;
      // Each coefficient is monotone on a linear piece.
      for_each_piece(c, t_from, t_to, [&](int seg, double lo, double hi) {
        total += std::abs(coefficient_value(member_state(params, c, seg, hi), i) -
                          coefficient_value(member_state(params, c, seg, lo), i));
      });
      worst = std::max(worst, total);
    }
  }
  return worst;
}

StabilityConstants compute_constants(const CoefficientFamily& family, double epsilon) {
  family.validate();
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");

  double big_m = 0.0;
  double mu = std::numeric_limits<double>::infinity();
  for (const PiecewiseControl& c : family.members) {
    for_each_piece(c, family.t_from, family.t_to, [&](int seg, double lo, double hi) {
      for (double t : {lo, hi}) {
        const Coefficients s = member_state(family.params, c, seg, t);
        const double f0 = coefficient_value(s, 0);
        big_m = std::max({big_m, std::abs(f0), std::abs(coefficient_value(s, 1))});
        mu = std::min(mu, f0);
      }
    });
  }
  if (!(mu > 0.0)) throw InvalidArgument("leading coefficient infimum mu must be > 0");

  const MotionParams& p = family.params;
  StabilityConstants k;
  k.M = big_m;
  k.mu = mu;
  k.epsilon = epsilon;
  k.b_eps = interaction_form_offset(p.lambda, p.delta, epsilon * mu / (kNu * big_m));
  k.m = big_m * k.b_eps;
  k.c = std::max({big_m + mu * epsilon, 1.0 + 2.0 * k.m, 1.0 / (mu * (1.0 - epsilon)), 1.0});
  k.K = std::max({1.0, epsilon, interaction_form_offset(p.lambda, p.delta, epsilon)});
  k.derivative_l1 = family.derivative_l1();
  k.L = std::pow(k.c, 8) * std::exp(2.0 * k.c * k.c * k.K * (kNu + 1) * k.derivative_l1);
  return k;
}

double coefficient_difference_l1(const CoefficientFamily& family, int k, int l) {
  family.validate();
  const PiecewiseControl& ck = family.members.at(k);
  const PiecewiseControl& cl = family.members.at(l);
  const std::vector<double> bp = merged_breakpoints({&ck, &cl}, family.t_from, family.t_to);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    const double mid = 0.5 * (bp[s] + bp[s + 1]);
    const int sk = ck.segment_at(mid);
    const int sl = cl.segment_at(mid);
    for (int i = 0; i <= kNu; ++i) {
      total += abs_integral(
          [&](double t) {
            return coefficient_value(member_state(family.params, ck, sk, t), i) -
                   coefficient_value(member_state(family.params, cl, sl, t), i);
          },
          bp[s], bp[s + 1]);
    }
  }
  return total;
}

std::vector<SegmentBound> verify_stability_bound(const MotionParams& params,
                                                 const PiecewiseControl& v, int n, int m_refine,
                                                 const ComplexVector& psi, double epsilon,
                                                 int substeps_per_piece) {
  params.validate();
  if (v.kind() != ControlKind::constant) throw InvalidArgument("v must be piecewise constant");
  if (n < 1 || m_refine < 0) throw InvalidArgument("need n >= 1 and m_refine >= 0");
  if (substeps_per_piece < 1) throw InvalidArgument("substeps_per_piece must be >= 1");

  const BasisTruncation dim(static_cast<int>(psi.size()));
  const PiecewiseControl fn = lift_control(v, n);
  const PiecewiseControl fm = m_refine == 0 ? v : lift_control(v, m_refine);
  const std::vector<double> bp = merged_breakpoints({&fn, &fm}, v.start(), v.end());

  const TransformedSystem transformed(params, dim);
  const AuxiliarySystem auxiliary(params, dim);
  auto evolve = [&](const PiecewiseControl& c, double a, double b) {
    if (c.kind() == ControlKind::constant) return auxiliary.propagate(c, a, b).matrix;
    return transformed.propagate(c, a, b, (b - a) / substeps_per_piece).matrix;
  };

  std::vector<SegmentBound> out;
  ComplexVector state = psi;
  for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
    const double a = bp[s];
    const double b = bp[s + 1];
    SegmentBound seg;
    seg.t_from = a;
    seg.t_to = b;
    const ComplexMatrix um = evolve(fm, a, b);
    if (n != m_refine) {
      const ComplexMatrix un = evolve(fn, a, b);
      seg.lhs = minus_norm(((un - um) * state).eval());
      CoefficientFamily family{params, {fn, fm}, a, b};
      seg.constants = compute_constants(family, epsilon);
      seg.rhs = seg.constants.L * plus_norm(state) * coefficient_difference_l1(family, 0, 1);
    }
    out.push_back(seg);
    state = um * state;
  }
  return out;
}

std::vector<double> lifting_gap_l1(const MotionParams& params, const PiecewiseControl& v, int n) {
  params.validate();
  const PiecewiseControl fn = lift_control(v, n);
  const double l0 = params.ell0;
  std::vector<double> out;
  out.reserve(fn.segment_count());
  for (int k = 0; k < fn.segment_count(); ++k) {
    const double speed = fn.rate(k);
    out.push_back(abs_integral(
        [&](double t) {
          const double ell = l0 + params.lambda * fn.f_on_segment(k, t);
          return (1.0 / (l0 * l0) - 1.0 / (ell * ell)) + speed * (1.0 / l0 - 1.0 / ell);
        },
        fn.segment_begin(k), fn.segment_end(k)));
  }
  return out;
}

ConvergenceStudy lifting_convergence_study(const MotionParams& params, const PiecewiseControl& v,
                                           const ComplexVector& psi0, const std::vector<int>& n_list,
                                           double step) {
  params.validate();
  if (n_list.empty()) throw InvalidArgument("n_list is empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1 || (i > 0 && n_list[i] <= n_list[i - 1])) {
      throw InvalidArgument("n_list must be positive and strictly increasing");
    }
  }
  if (!(step > 0.0)) step = v.duration() / (64.0 * n_list.back());

  const BasisTruncation dim(static_cast<int>(psi0.size()));
  const AuxiliarySystem auxiliary(params, dim);
  const TransformedSystem transformed(params, dim);
  const ComplexVector reference = auxiliary.propagate(v, v.start(), v.end()).apply(psi0);

  ConvergenceStudy study;
  for (int n : n_list) {
    const PiecewiseControl fn = lift_control(v, n);
    const ComplexVector lifted = transformed.propagate(fn, fn.start(), fn.end(), step).apply(psi0);
    study.n.push_back(n);
    study.error.push_back(minus_norm((lifted - reference).eval()));
  }

  // Errors at round-off level carry no rate information.
  const double floor = 1e-12 * psi0.norm();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < study.n.size(); ++i) {
    if (!(study.error[i] > floor)) continue;
    const double x = std::log(static_cast<double>(study.n[i]));
    const double y = std::log(study.error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  study.slope = count >= 2 ? (count * sxy - sx * sy) / (count * sxx - sx * sx)
                           : std::numeric_limits<double>::quiet_NaN();
  return study;
}

}  // namespace boxctrl
