#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"

namespace lipgan {

// Points have a runtime dimension: scenarios range from 1-D to image-sized
// (3072-D) inputs.
using Point = Eigen::VectorXd;

inline bool all_finite(const Point& p) { return p.allFinite(); }

inline void require_same_dim(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
}

inline double euclidean(const Point& a, const Point& b) {
  require_same_dim(a, b);
  return (a - b).norm();
}

inline double l1_distance(const Point& a, const Point& b) {
  require_same_dim(a, b);
  return (a - b).lpNorm<1>();
}

// Cosine of the angle between two vectors; 0 when either is zero.
inline double cosine(const Point& a, const Point& b) {
  require_same_dim(a, b);
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

inline Point make_point(std::initializer_list<double> coords) {
  Point p(static_cast<Eigen::Index>(coords.size()));
  Eigen::Index i = 0;
  for (double c : coords) p[i++] = c;
  return p;
}

/// Weighted finite set of points of a common dimension. Weights are
/// non-negative and sum to one.
class PointCloud {
 public:
  static constexpr double kWeightTolerance = 1e-12;

  PointCloud() = default;

  // Uniform weights.
  explicit PointCloud(std::vector<Point> points)
      : points_(std::move(points)) {
    if (points_.empty()) throw InvalidArgument("point cloud must contain at least one point");
    weights_.assign(points_.size(), 1.0 / static_cast<double>(points_.size()));
    validate();
  }

  PointCloud(std::vector<Point> points, std::vector<double> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    validate();
  }

  // Builds a cloud from unnormalized non-negative weights.
  static PointCloud normalized(std::vector<Point> points, std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw InvalidArgument("point cloud weights must have a positive sum");
    for (double& w : weights) w /= total;
    return PointCloud(std::move(points), std::move(weights));
  }

  std::size_t size() const { return points_.size(); }
  Eigen::Index dim() const { return points_.front().size(); }
  const Point& point(std::size_t i) const { return points_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  bool is_uniform() const {
    const double u = 1.0 / static_cast<double>(size());
    for (double w : weights_)
      if (std::abs(w - u) > kWeightTolerance) return false;
    return true;
  }

  // Same weights, new positions. Used by the particle flow.
  PointCloud with_points(std::vector<Point> points) const {
    return PointCloud(std::move(points), weights_);
  }

 private:
  void validate() const {
    if (points_.empty()) throw InvalidArgument("point cloud must contain at least one point");
    if (points_.size() != weights_.size())
      throw InvalidArgument("point cloud has " + std::to_string(points_.size()) + " points but " +
                            std::to_string(weights_.size()) + " weights");
    const Eigen::Index d = points_.front().size();
    if (d < 1) throw InvalidArgument("points must have dimension >= 1");
    double total = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (points_[i].size() != d) throw DimensionMismatch(d, points_[i].size());
      if (!all_finite(points_[i]))
        throw InvalidArgument("point " + std::to_string(i) + " has a non-finite coordinate");
      if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i]))
        throw InvalidArgument("weight " + std::to_string(i) + " must be finite and non-negative");
      total += weights_[i];
    }
    if (std::abs(total - 1.0) > kWeightTolerance)
      throw InvalidArgument("point cloud weights must sum to 1");
  }

  std::vector<Point> points_;
  std::vector<double> weights_;
};

/// Counter-based generator: output i is SplitMix64 of (seed, i). Streams are
/// reproducible from the seed alone and cheap to fork.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes two draws per call so the stream position is fixed.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Draws an index with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    const double target = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last_positive = i;
      if (target < acc) return i;
    }
    return last_positive;
  }

  // Independent child stream; does not advance this one.
  Rng fork(std::uint64_t stream) const {
    Rng child(seed_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    child.counter_ = counter_;
    return child;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Points x*t + y*(1-t) with x ~ pg, y ~ pr (by weight) and t ~ U[0,1].
inline std::vector<Point> blend_sample(const PointCloud& pg, const PointCloud& pr,
                                       std::size_t count, Rng& rng) {
  if (pg.dim() != pr.dim()) throw DimensionMismatch(pg.dim(), pr.dim());
  if (count == 0) throw InvalidArgument("blend_sample: count must be >= 1");
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Point& x = pg.point(rng.categorical(pg.weights()));
    const Point& y = pr.point(rng.categorical(pr.weights()));
    const double t = rng.uniform();
    // y + t(x - y) is exact when x == y.
    out.push_back(y + t * (x - y));
  }
  return out;
}

}  // namespace lipgan
