#pragma once

// Experiment presets. Each preset fully determines the real and fake sides
// from its parameters (and a seed where sampling is involved).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lipgan/closed_form.hpp"
#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"

namespace lipgan {

enum class PresetKind { parallel_lines, two_gaussians_1d, two_delta, random_clouds, image_cloud };

inline const char* to_string(PresetKind k) {
  switch (k) {
    case PresetKind::parallel_lines: return "parallel_lines";
    case PresetKind::two_gaussians_1d: return "two_gaussians_1d";
    case PresetKind::two_delta: return "two_delta";
    case PresetKind::random_clouds: return "random_clouds";
    case PresetKind::image_cloud: return "image_cloud";
  }
  return "?";
}

inline PresetKind parse_preset(const std::string& s) {
  if (s == "parallel_lines") return PresetKind::parallel_lines;
  if (s == "two_gaussians_1d") return PresetKind::two_gaussians_1d;
  if (s == "two_delta") return PresetKind::two_delta;
  if (s == "random_clouds") return PresetKind::random_clouds;
  if (s == "image_cloud") return PresetKind::image_cloud;
  throw InvalidArgument("unknown scenario preset '" + s +
                        "'; valid options: parallel_lines, two_gaussians_1d, two_delta, random_clouds, image_cloud");
}

/// Either side of a scenario is a point cloud (trainable flows) or an
/// analytic density (closed-form fields).
struct Scenario {
  std::string name;
  PresetKind preset = PresetKind::parallel_lines;
  Eigen::Index dim = 2;
  std::optional<PointCloud> real_cloud, fake_cloud;
  std::optional<AnalyticDensity> real_density, fake_density;

  bool is_discrete() const { return real_cloud.has_value() && fake_cloud.has_value(); }
};

/// P_r = {(0, i/(n-1))}, P_g = {(separation, i/(n-1))}, uniform weights.
inline Scenario parallel_lines(std::size_t n = 10, double separation = 1.0) {
  if (n < 2) throw InvalidArgument("parallel_lines: need at least 2 points per line");
  std::vector<Point> r, g;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = static_cast<double>(i) / static_cast<double>(n - 1);
    r.push_back(make_point({0.0, y}));
    g.push_back(make_point({separation, y}));
  }
  Scenario s;
  s.name = "parallel_lines";
  s.preset = PresetKind::parallel_lines;
  s.dim = 2;
  s.real_cloud = PointCloud(std::move(r));
  s.fake_cloud = PointCloud(std::move(g));
  return s;
}

/// One real point at 0 and one fake point at `distance` on the line.
inline Scenario two_delta(double distance) {
  if (!(distance >= 0.0)) throw InvalidArgument("two_delta: distance must be non-negative");
  Scenario s;
  s.name = "two_delta";
  s.preset = PresetKind::two_delta;
  s.dim = 1;
  s.real_cloud = PointCloud({make_point({0.0})});
  s.fake_cloud = PointCloud({make_point({distance})});
  return s;
}

/// Real points uniform in [0, spread]^dim; fake points uniform in the same box
/// shifted by `offset` along the first axis.
inline Scenario random_clouds(std::size_t n_real, std::size_t n_fake, Eigen::Index dim, double spread,
                              double offset, std::uint64_t seed) {
  if (n_real < 1 || n_fake < 1) throw InvalidArgument("random_clouds: point counts must be positive");
  if (dim < 1) throw InvalidArgument("random_clouds: dim must be positive");
  Rng rng(seed);
  auto sample = [&](std::size_t n, double shift) {
    std::vector<Point> pts;
    for (std::size_t i = 0; i < n; ++i) {
      Point p(dim);
      for (Eigen::Index d = 0; d < dim; ++d) p[d] = rng.uniform(0.0, spread);
      p[0] += shift;
      pts.push_back(std::move(p));
    }
    return pts;
  };
  Scenario s;
  s.name = "random_clouds";
  s.preset = PresetKind::random_clouds;
  s.dim = dim;
  s.real_cloud = PointCloud(sample(n_real, 0.0));
  s.fake_cloud = PointCloud(sample(n_fake, offset));
  return s;
}

enum class FakeShape { box, gaussian };

/// P_r: two Gaussians at -c and +c with standard deviation sigma. P_g: a
/// uniform box of half-width `fake_half_width` around -c (the generator has
/// collapsed onto mode A), or a Gaussian of the same width there.
inline Scenario two_gaussians_1d(double c = 2.0, double sigma = 0.5, FakeShape shape = FakeShape::box,
                                 std::optional<double> fake_half_width = std::nullopt) {
  if (!(sigma > 0.0)) throw InvalidArgument("two_gaussians_1d: sigma must be positive");
  const double hw = fake_half_width.value_or(2.0 * sigma);
  if (!(hw > 0.0)) throw InvalidArgument("two_gaussians_1d: fake half-width must be positive");
  Scenario s;
  s.name = "two_gaussians_1d";
  s.preset = PresetKind::two_gaussians_1d;
  s.dim = 1;
  s.real_density = AnalyticDensity::gaussian_mixture({0.5, 0.5}, {make_point({-c}), make_point({c})},
                                                     {make_point({sigma}), make_point({sigma})});
  s.fake_density = shape == FakeShape::box ? AnalyticDensity::uniform_box(make_point({-c - hw}), make_point({-c + hw}))
                                           : AnalyticDensity::gaussian(make_point({-c}), sigma);
  return s;
}

/// Real side: given images (flattened rows). Fake side: `n_fake` Gaussian
/// noise vectors with the images' mean and standard deviation.
inline Scenario image_cloud(PointCloud images, std::size_t n_fake, std::uint64_t seed) {
  if (n_fake < 1) throw InvalidArgument("image_cloud: fake count must be positive");
  const Eigen::Index dim = images.dim();
  double mean = 0.0, sq = 0.0;
  std::size_t cnt = 0;
  for (const auto& p : images.points()) {
    mean += p.sum();
    sq += p.squaredNorm();
    cnt += static_cast<std::size_t>(p.size());
  }
  mean /= static_cast<double>(cnt);
  const double sd = std::sqrt(std::max(1e-12, sq / static_cast<double>(cnt) - mean * mean));
  Rng rng(seed);
  std::vector<Point> fake;
  for (std::size_t i = 0; i < n_fake; ++i) {
    Point p(dim);
    for (Eigen::Index d = 0; d < dim; ++d) p[d] = mean + sd * rng.normal();
    fake.push_back(std::move(p));
  }
  Scenario s;
  s.name = "image_cloud";
  s.preset = PresetKind::image_cloud;
  s.dim = dim;
  s.real_cloud = std::move(images);
  s.fake_cloud = PointCloud(std::move(fake));
  return s;
}

}  // namespace lipgan
