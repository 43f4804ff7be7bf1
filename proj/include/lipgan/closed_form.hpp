#pragma once

// Optimal discriminators of unconstrained objectives over analytic densities.
// They are pointwise functions of the local densities, which is what makes
// their input-gradients uninformative off-support and local near modes.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"

namespace lipgan {

inline constexpr double kDensityFloor = 1e-300;

class AnalyticDensity {
 public:
  enum class Kind { gaussian_mixture, uniform_box };

  // Mixture of axis-aligned Gaussians; stddevs[i] holds per-coordinate
  // standard deviations of component i.
  static AnalyticDensity gaussian_mixture(std::vector<double> weights, std::vector<Point> means,
                                          std::vector<Point> stddevs) {
    if (weights.empty()) throw InvalidArgument("gaussian mixture needs at least one component");
    if (weights.size() != means.size() || weights.size() != stddevs.size())
      throw InvalidArgument("gaussian mixture: weights, means and stddevs must have equal length");
    double total = 0.0;
    const Eigen::Index d = means.front().size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= 0.0)) throw InvalidArgument("gaussian mixture weights must be non-negative");
      total += weights[i];
      if (means[i].size() != d) throw DimensionMismatch(d, means[i].size());
      if (stddevs[i].size() != d) throw DimensionMismatch(d, stddevs[i].size());
      if (!((stddevs[i].array() > 0.0).all()))
        throw InvalidArgument("gaussian mixture standard deviations must be strictly positive");
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("gaussian mixture weights must sum to 1");
    AnalyticDensity out;
    out.kind_ = Kind::gaussian_mixture;
    out.weights_ = std::move(weights);
    out.means_ = std::move(means);
    out.stddevs_ = std::move(stddevs);
    return out;
  }

  // Isotropic single Gaussian.
  static AnalyticDensity gaussian(Point mean, double stddev) {
    const Eigen::Index d = mean.size();
    return gaussian_mixture({1.0}, {std::move(mean)}, {Point::Constant(d, stddev)});
  }

  static AnalyticDensity uniform_box(Point lower, Point upper) {
    require_same_dim(lower, upper);
    if (!((lower.array() < upper.array()).all()))
      throw InvalidArgument("uniform box corners must satisfy lower < upper in every coordinate");
    AnalyticDensity out;
    out.kind_ = Kind::uniform_box;
    out.lower_ = std::move(lower);
    out.upper_ = std::move(upper);
    return out;
  }

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return kind_ == Kind::uniform_box ? lower_.size() : means_.front().size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Point>& means() const { return means_; }
  const std::vector<Point>& stddevs() const { return stddevs_; }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }

  // Same density shifted by `offset`.
  AnalyticDensity translated(const Point& offset) const {
    AnalyticDensity out = *this;
    if (kind_ == Kind::uniform_box) {
      out.lower_ += offset;
      out.upper_ += offset;
    } else {
      for (auto& m : out.means_) m += offset;
    }
    return out;
  }

  double value(const Point& x) const {
    check_dim(x);
    if (kind_ == Kind::uniform_box) {
      if (((x.array() >= lower_.array()) && (x.array() <= upper_.array())).all())
        return 1.0 / (upper_ - lower_).prod();
      return 0.0;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < weights_.size(); ++c) total += weights_[c] * component_pdf(c, x);
    return total;
  }

  Point gradient(const Point& x) const {
    check_dim(x);
    if (kind_ == Kind::uniform_box) {
      const bool inside_closed = ((x.array() >= lower_.array()) && (x.array() <= upper_.array())).all();
      const bool on_face = ((x.array() == lower_.array()) || (x.array() == upper_.array())).any();
      if (inside_closed && on_face)
        throw InvalidArgument("density gradient undefined on the boundary of a uniform box");
      return Point::Zero(x.size());
    }
    Point g = Point::Zero(x.size());
    for (std::size_t c = 0; c < weights_.size(); ++c) {
      const Point var = stddevs_[c].array().square();
      g += weights_[c] * component_pdf(c, x) * (-(x - means_[c]).array() / var.array()).matrix();
    }
    return g;
  }

 private:
  AnalyticDensity() = default;

  void check_dim(const Point& x) const {
    if (x.size() != dim()) throw DimensionMismatch(dim(), x.size());
  }

  double component_pdf(std::size_t c, const Point& x) const {
    const auto z = ((x - means_[c]).array() / stddevs_[c].array());
    const double log_norm = -0.5 * static_cast<double>(x.size()) * std::log(2.0 * M_PI) -
                            stddevs_[c].array().log().sum();
    return std::exp(log_norm - 0.5 * z.square().sum());
  }

  Kind kind_ = Kind::gaussian_mixture;
  std::vector<double> weights_;
  std::vector<Point> means_;
  std::vector<Point> stddevs_;
  Point lower_, upper_;
};

inline double density_value(const AnalyticDensity& d, const Point& x) { return d.value(x); }
inline Point density_grad(const AnalyticDensity& d, const Point& x) { return d.gradient(x); }

struct ClosedFormSpec {
  enum class Kind { js, least_squares, fisher };
  Kind kind = Kind::js;
  // least_squares labels: fake target alpha, real target beta.
  double alpha = 0.0;
  double beta = 1.0;
  // fisher reference measure covering both supports.
  std::optional<AnalyticDensity> mu;

  static ClosedFormSpec js() { return {}; }
  static ClosedFormSpec least_squares(double alpha, double beta) {
    if (alpha == beta) throw InvalidArgument("least_squares labels must differ");
    ClosedFormSpec s;
    s.kind = Kind::least_squares;
    s.alpha = alpha;
    s.beta = beta;
    return s;
  }
  static ClosedFormSpec fisher(AnalyticDensity mu) {
    ClosedFormSpec s;
    s.kind = Kind::fisher;
    s.mu = std::move(mu);
    return s;
  }
};

inline const char* to_string(ClosedFormSpec::Kind k) {
  switch (k) {
    case ClosedFormSpec::Kind::js: return "js";
    case ClosedFormSpec::Kind::least_squares: return "least_squares";
    case ClosedFormSpec::Kind::fisher: return "fisher";
  }
  return "?";
}

namespace detail {

inline std::string point_str(const Point& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) s += (i ? "," : "") + std::to_string(x[i]);
  return s + ")";
}

inline void require_floor(double density, const char* which, const Point& x) {
  if (!(density >= kDensityFloor))
    throw OffSupportError(std::string("off-support evaluation: ") + which + " density below floor at " + point_str(x));
}

inline const AnalyticDensity& fisher_mu(const ClosedFormSpec& spec) {
  if (!spec.mu) throw InvalidArgument("fisher closed form requires a reference density mu");
  return *spec.mu;
}

}  // namespace detail

/// js: log(pr/pg); least_squares: (alpha pg + beta pr)/(pg + pr);
/// fisher: (pr - pg)/mu, without the positive 1/F_mu normalization.
inline double fstar_value(const ClosedFormSpec& spec, const AnalyticDensity& pg, const AnalyticDensity& pr,
                          const Point& x) {
  const double g = pg.value(x);
  const double r = pr.value(x);
  switch (spec.kind) {
    case ClosedFormSpec::Kind::js:
      detail::require_floor(g, "P_g", x);
      detail::require_floor(r, "P_r", x);
      return std::log(r / g);
    case ClosedFormSpec::Kind::least_squares:
      detail::require_floor(g + r, "P_g + P_r", x);
      return (spec.alpha * g + spec.beta * r) / (g + r);
    case ClosedFormSpec::Kind::fisher: {
      const double m = detail::fisher_mu(spec).value(x);
      detail::require_floor(m, "mu", x);
      return (r - g) / m;
    }
  }
  throw InvalidArgument("unknown closed form kind");
}

inline Point fstar_grad(const ClosedFormSpec& spec, const AnalyticDensity& pg, const AnalyticDensity& pr,
                        const Point& x) {
  const double g = pg.value(x);
  const double r = pr.value(x);
  switch (spec.kind) {
    case ClosedFormSpec::Kind::js: {
      detail::require_floor(g, "P_g", x);
      detail::require_floor(r, "P_r", x);
      return pr.gradient(x) / r - pg.gradient(x) / g;
    }
    case ClosedFormSpec::Kind::least_squares: {
      const double s = g + r;
      detail::require_floor(s, "P_g + P_r", x);
      // d/dx of (alpha g + beta r)/(g + r) = (beta - alpha)(g r' - r g')/(g + r)^2
      return (spec.beta - spec.alpha) * (g * pr.gradient(x) - r * pg.gradient(x)) / (s * s);
    }
    case ClosedFormSpec::Kind::fisher: {
      const AnalyticDensity& mu = detail::fisher_mu(spec);
      const double m = mu.value(x);
      detail::require_floor(m, "mu", x);
      return ((pr.gradient(x) - pg.gradient(x)) * m - (r - g) * mu.gradient(x)) / (m * m);
    }
  }
  throw InvalidArgument("unknown closed form kind");
}

struct GradField {
  std::vector<std::pair<Point, Point>> arrows;
  // Grid points where the field is undefined, with the reason.
  std::vector<std::pair<Point, std::string>> failures;
};

/// (x, grad f*(x)) over a grid, in grid order. Per-point errors are
/// recorded rather than thrown.
inline GradField grad_field(const ClosedFormSpec& spec, const AnalyticDensity& pg, const AnalyticDensity& pr,
                            const std::vector<Point>& grid) {
  GradField out;
  out.arrows.reserve(grid.size());
  for (const Point& x : grid) {
    try {
      out.arrows.emplace_back(x, fstar_grad(spec, pg, pr, x));
    } catch (const Error& e) {
      out.failures.emplace_back(x, e.what());
    }
  }
  return out;
}

}  // namespace lipgan
