#pragma once

// Discriminator objectives J_D = E_pg[phi(f)] + E_pr[varphi(f)] and the
// convex family they are checked against:
//   phi' > 0, phi'' >= 0, varphi' < 0, varphi'' >= 0, and phi'(a) + varphi'(a) = 0
// for some anchor a.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"

namespace lipgan {

using ScalarFn = std::function<double(double)>;

struct ObjectiveSpec {
  std::string name;
  ScalarFn phi, phi_d1, phi_d2;
  ScalarFn varphi, varphi_d1, varphi_d2;
  std::optional<double> anchor_a;
};

struct MembershipViolation {
  std::string condition;
  double probe = 0.0;
  double observed = 0.0;
};

struct MembershipReport {
  bool is_member = false;
  std::optional<double> anchor_a;
  // At most kMaxRecordedPerCondition entries per condition; violation_count
  // has the full tally.
  std::vector<MembershipViolation> violations;
  std::size_t violation_count = 0;

  static constexpr std::size_t kMaxRecordedPerCondition = 8;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Builds phi(x) = varphi(-x) from phi and its two derivatives.
inline ObjectiveSpec mirrored(std::string name, ScalarFn f, ScalarFn d1, ScalarFn d2,
                              std::optional<double> anchor) {
  ObjectiveSpec s;
  s.name = std::move(name);
  s.varphi = [f](double x) { return f(-x); };
  s.varphi_d1 = [d1](double x) { return -d1(-x); };
  s.varphi_d2 = [d2](double x) { return d2(-x); };
  s.phi = std::move(f);
  s.phi_d1 = std::move(d1);
  s.phi_d2 = std::move(d2);
  s.anchor_a = anchor;
  return s;
}

}  // namespace detail

inline std::vector<std::string> builtin_objective_names() {
  return {"linear", "logistic", "cosh_like", "exponential", "hinge", "least_squares", "logistic_plus_linear"};
}

/// Pointwise non-negative linear combination of objectives. The family is
/// closed under these.
inline ObjectiveSpec combine(const std::vector<std::pair<ObjectiveSpec, double>>& objs) {
  bool any_positive = false;
  for (const auto& [o, w] : objs) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("combine: weights must be finite and non-negative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw InvalidArgument("combine: at least one weight must be positive");

  std::vector<std::pair<ObjectiveSpec, double>> terms;
  std::string name;
  for (const auto& [o, w] : objs) {
    if (w == 0.0) continue;
    if (!name.empty()) name += "+";
    name += std::to_string(w) + "*" + o.name;
    terms.emplace_back(o, w);
  }
  auto sum = [terms](ScalarFn ObjectiveSpec::*member) -> ScalarFn {
    return [terms, member](double x) {
      double acc = 0.0;
      for (const auto& [o, w] : terms) acc += w * (o.*member)(x);
      return acc;
    };
  };
  ObjectiveSpec out;
  out.name = name;
  out.phi = sum(&ObjectiveSpec::phi);
  out.phi_d1 = sum(&ObjectiveSpec::phi_d1);
  out.phi_d2 = sum(&ObjectiveSpec::phi_d2);
  out.varphi = sum(&ObjectiveSpec::varphi);
  out.varphi_d1 = sum(&ObjectiveSpec::varphi_d1);
  out.varphi_d2 = sum(&ObjectiveSpec::varphi_d2);
  // Shared anchors survive the combination.
  if (terms.size() == 1) out.anchor_a = terms.front().first.anchor_a;
  else {
    std::optional<double> a = terms.front().first.anchor_a;
    for (const auto& t : terms)
      if (!t.first.anchor_a || !a || *t.first.anchor_a != *a) a.reset();
    out.anchor_a = a;
  }
  return out;
}

/// Built-in objectives, all of the mirrored form phi(x) = varphi(-x).
/// `param` is the epsilon of logistic_plus_linear (default 0.01).
inline ObjectiveSpec builtin_objective(std::string_view name, std::optional<double> param = std::nullopt) {
  using detail::mirrored;
  if (name == "linear") {
    return mirrored("linear", [](double x) { return x; }, [](double) { return 1.0; },
                    [](double) { return 0.0; }, 0.0);
  }
  if (name == "logistic") {
    return mirrored(
        "logistic", [](double x) { return detail::softplus(x); },
        [](double x) { return detail::sigmoid(x); },
        [](double x) { return detail::sigmoid(x) * detail::sigmoid(-x); }, 0.0);
  }
  if (name == "cosh_like") {
    // x + sqrt(x^2 + 1), written to avoid cancellation for negative x.
    return mirrored(
        "cosh_like",
        [](double x) {
          const double r = std::hypot(x, 1.0);
          return x >= 0.0 ? x + r : 1.0 / (r - x);
        },
        [](double x) {
          const double r = std::hypot(x, 1.0);
          return x >= 0.0 ? 1.0 + x / r : 1.0 / (r * (r - x));
        },
        [](double x) {
          const double r = std::hypot(x, 1.0);
          return 1.0 / (r * r * r);
        },
        0.0);
  }
  if (name == "exponential") {
    return mirrored("exponential", [](double x) { return std::exp(x); },
                    [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); }, 0.0);
  }
  if (name == "hinge") {
    // -min(0, -x - 1) = max(0, x + 1); derivative at the kink taken as 0.
    return mirrored("hinge", [](double x) { return std::max(0.0, x + 1.0); },
                    [](double x) { return x > -1.0 ? 1.0 : 0.0; }, [](double) { return 0.0; },
                    std::nullopt);
  }
  if (name == "least_squares") {
    // phi = (x + 1)^2, varphi = (x - 1)^2: not monotone, so not a member.
    return mirrored("least_squares", [](double x) { return (x + 1.0) * (x + 1.0); },
                    [](double x) { return 2.0 * (x + 1.0); }, [](double) { return 2.0; }, 0.0);
  }
  if (name == "logistic_plus_linear") {
    const double eps = param.value_or(0.01);
    if (!(eps >= 0.0) || !std::isfinite(eps))
      throw InvalidArgument("logistic_plus_linear: epsilon must be finite and non-negative");
    ObjectiveSpec s = combine({{builtin_objective("logistic"), 1.0}, {builtin_objective("linear"), eps}});
    s.name = "logistic_plus_linear(" + std::to_string(eps) + ")";
    return s;
  }
  std::string valid;
  for (const auto& n : builtin_objective_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw InvalidArgument("unknown objective '" + std::string(name) + "'; valid options: " + valid);
}

/// [-10, 10] at step 1e-3 merged with 256 reproducible random points.
inline std::vector<double> default_probe_grid() {
  std::vector<double> grid;
  grid.reserve(20001 + 256);
  for (int i = -10000; i <= 10000; ++i) grid.push_back(i * 1e-3);
  Rng rng(0x5EEDF00DULL);
  for (int i = 0; i < 256; ++i) grid.push_back(rng.uniform(-10.0, 10.0));
  std::sort(grid.begin(), grid.end());
  return grid;
}

inline MembershipReport check_membership(const ObjectiveSpec& obj, const std::vector<double>& probe_grid) {
  if (probe_grid.empty()) throw InvalidArgument("check_membership: probe grid is empty");
  if (!std::is_sorted(probe_grid.begin(), probe_grid.end()))
    throw InvalidArgument("check_membership: probe grid must be sorted");
  if (probe_grid.front() > -10.0 || probe_grid.back() < 10.0)
    throw InvalidArgument("check_membership: probe grid must span at least [-10, 10]");

  auto eval = [](const ScalarFn& fn, double x, const char* what) {
    const double v = fn(x);
    if (!std::isfinite(v))
      throw NumericalError(std::string("check_membership: ") + what + " is non-finite at probe " + std::to_string(x));
    return v;
  };

  MembershipReport report;
  constexpr double kCurvatureSlack = 1e-12;
  std::size_t recorded[4] = {0, 0, 0, 0};
  auto violate = [&](int cond, const char* label, double x, double v) {
    ++report.violation_count;
    if (recorded[cond]++ < MembershipReport::kMaxRecordedPerCondition)
      report.violations.push_back({label, x, v});
  };

  std::vector<double> slope_sum(probe_grid.size());
  for (std::size_t i = 0; i < probe_grid.size(); ++i) {
    const double x = probe_grid[i];
    const double p1 = eval(obj.phi_d1, x, "phi'");
    const double p2 = eval(obj.phi_d2, x, "phi''");
    const double v1 = eval(obj.varphi_d1, x, "varphi'");
    const double v2 = eval(obj.varphi_d2, x, "varphi''");
    eval(obj.phi, x, "phi");
    eval(obj.varphi, x, "varphi");
    if (!(p1 > 0.0)) violate(0, "phi' > 0", x, p1);
    if (!(v1 < 0.0)) violate(1, "varphi' < 0", x, v1);
    if (p2 < -kCurvatureSlack) violate(2, "phi'' >= 0", x, p2);
    if (v2 < -kCurvatureSlack) violate(3, "varphi'' >= 0", x, v2);
    slope_sum[i] = p1 + v1;
  }

  // Anchor: root of phi' + varphi', which is non-decreasing on members.
  const bool flat = std::all_of(slope_sum.begin(), slope_sum.end(), [](double s) { return s == 0.0; });
  if (flat) {
    report.anchor_a = 0.0;
  } else {
    auto s = [&](double x) { return obj.phi_d1(x) + obj.varphi_d1(x); };
    for (std::size_t i = 0; i < probe_grid.size(); ++i) {
      if (slope_sum[i] == 0.0) {
        report.anchor_a = probe_grid[i];
        break;
      }
      if (i > 0 && slope_sum[i - 1] < 0.0 && slope_sum[i] > 0.0) {
        double lo = probe_grid[i - 1], hi = probe_grid[i];
        for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double sm = s(mid);
          if (sm == 0.0) { lo = hi = mid; break; }
          (sm < 0.0 ? lo : hi) = mid;
        }
        report.anchor_a = 0.5 * (lo + hi);
        break;
      }
    }
    if (!report.anchor_a) {
      ++report.violation_count;
      report.violations.push_back({"exists a: phi'(a) + varphi'(a) = 0", probe_grid.front(), slope_sum.front()});
    }
  }
  report.is_member = report.violation_count == 0 && report.anchor_a.has_value();
  return report;
}

inline MembershipReport check_membership(const ObjectiveSpec& obj) {
  static const std::vector<double> grid = default_probe_grid();
  return check_membership(obj, grid);
}

struct TwoDeltaOptimum {
  double alpha = 0.0;    // f at the fake delta
  double j_value = 0.0;  // phi(alpha) + varphi(alpha + k * distance)
};

namespace detail {

// Minimizes phi(alpha) + varphi(alpha + beta) by bisection on its
// non-decreasing derivative. Assumes membership.
inline TwoDeltaOptimum two_delta_unchecked(const ObjectiveSpec& obj, double beta) {
  auto slope = [&](double a) { return obj.phi_d1(a) + obj.varphi_d1(a + beta); };
  auto value = [&](double a) { return obj.phi(a) + obj.varphi(a + beta); };

  // Convex with zero slope at 0: 0 is a minimizer. This is also the
  // reporting convention for flat (linear) objectives.
  const double s0 = slope(0.0);
  if (s0 == 0.0) return {0.0, value(0.0)};

  double lo = 0.0, hi = 0.0;
  double step = 1.0;
  constexpr double kMaxReach = 1e6;
  if (s0 > 0.0) {
    while (true) {
      lo = -step;
      if (slope(lo) <= 0.0) break;
      hi = lo;
      step *= 2.0;
      if (step > kMaxReach) throw NumericalError("two_delta_optimum: no minimizer found (objective unbounded below?)");
    }
  } else {
    while (true) {
      hi = step;
      if (slope(hi) >= 0.0) break;
      lo = hi;
      step *= 2.0;
      if (step > kMaxReach) throw NumericalError("two_delta_optimum: no minimizer found (objective unbounded below?)");
    }
  }
  constexpr double kTol = 1e-10;
  for (int it = 0; it < 400 && hi - lo > kTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double sm = slope(mid);
    if (sm == 0.0) { lo = hi = mid; break; }
    (sm < 0.0 ? lo : hi) = mid;
  }
  const double alpha = 0.5 * (lo + hi);
  return {alpha, value(alpha)};
}

inline void require_member(const ObjectiveSpec& obj, const char* op) {
  if (!check_membership(obj).is_member)
    throw InvalidArgument(std::string(op) + ": objective '" + obj.name + "' is not a family member");
}

}  // namespace detail

/// Two deltas at distance `distance` with f(real) - f(fake) = k * distance:
/// the optimal fake-side value alpha and the resulting J_D.
inline TwoDeltaOptimum two_delta_optimum(const ObjectiveSpec& obj, double distance, double k) {
  if (!(distance > 0.0)) throw InvalidArgument("two_delta_optimum: distance must be positive");
  if (!(k >= 0.0)) throw InvalidArgument("two_delta_optimum: k must be non-negative");
  detail::require_member(obj, "two_delta_optimum");
  return detail::two_delta_unchecked(obj, k * distance);
}

/// argmin over k >= 0 of two_delta_optimum(obj, distance, k).j_value + lambda k^2,
/// by golden-section search.
inline double optimal_k_two_delta(const ObjectiveSpec& obj, double distance, double lambda) {
  if (!(distance > 0.0)) throw InvalidArgument("optimal_k_two_delta: distance must be positive");
  if (!(lambda > 0.0)) throw InvalidArgument("optimal_k_two_delta: lambda must be positive");
  const MembershipReport m = check_membership(obj);
  if (!m.is_member) throw InvalidArgument("optimal_k_two_delta: objective '" + obj.name + "' is not a family member");

  auto total = [&](double k) {
    return detail::two_delta_unchecked(obj, k * distance).j_value + lambda * k * k;
  };

  // Tangent lines at the anchor give J(k) >= c - phi'(a) d k + lambda k^2, so
  // no k beyond the point where that bound exceeds J(0) can be optimal.
  const double a = *m.anchor_a;
  const double c = obj.phi(a) + obj.varphi(a);
  const double s = obj.phi_d1(a) * distance;
  const double j0 = total(0.0);
  const double disc = s * s + 4.0 * lambda * std::max(0.0, j0 - c);
  double lo = 0.0;
  double hi = (s + std::sqrt(disc)) / (2.0 * lambda) * 1.01 + 1e-12;

  constexpr double kInvPhi = 0.6180339887498949;
  constexpr double kTol = 1e-8;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = total(x1), f2 = total(x2);
  while (hi - lo > kTol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = total(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = total(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace lipgan
