#pragma once

// Run manifests. Grammar (one item per line):
//
//   # comment            ignored, as are blank lines
//   [section]            one of scenario, objective, penalty, training, output
//   key = value          numbers are decimal, strings bare, lists comma-separated
//
// Keys may appear once. Unknown keys, keys the chosen preset does not use,
// missing required keys, type mismatches and invariant violations are all
// errors naming the key path (e.g. "penalty.lambda must be positive").

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lipgan/dynamics.hpp"
#include "lipgan/error.hpp"
#include "lipgan/io.hpp"
#include "lipgan/lipschitz.hpp"
#include "lipgan/mlp.hpp"
#include "lipgan/objectives.hpp"
#include "lipgan/scenario.hpp"

namespace lipgan {

class ConfigError : public ParseError {
 public:
  using ParseError::ParseError;
};

struct ScenarioSettings {
  PresetKind preset = PresetKind::parallel_lines;
  std::size_t points_per_line = 10;
  double separation = 1.0;
  double distance = 1.0;
  std::size_t n_real = 20;
  std::size_t n_fake = 20;
  long dim = 2;
  double spread = 1.0;
  double offset = 2.0;
  std::uint64_t cloud_seed = 42;
  double c = 2.0;
  double sigma = 0.5;
  FakeShape fake_shape = FakeShape::box;
  std::optional<double> fake_half_width;
  std::size_t field_points = 201;
  std::string images;
};

struct NetSettings {
  std::vector<int> hidden{64, 64};
  Activation activation;
  InitScheme init = InitScheme::he;

  std::vector<int> widths(int input_dim) const {
    std::vector<int> w{input_dim};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(1);
    return w;
  }
};

struct SurfaceGrid {
  std::vector<std::string> activations{"relu"};
  std::vector<double> lrs{1e-3};
  std::vector<std::size_t> depths{2};
};

struct OutputSettings {
  std::string dir = "out";
  std::size_t snapshot_every = 50;
  std::size_t lattice_n = 41;
};

struct RunManifest {
  ScenarioSettings scenario;
  std::string objective_name;
  std::optional<double> objective_param;
  TrainConfig training;  // holds the resolved objective and penalty
  NetSettings net;
  std::size_t static_steps = 10000;  // discriminator-only training (verify, surface)
  SurfaceGrid surface;
  OutputSettings output;
  std::uint64_t seed = 1;
  std::filesystem::path base_dir;  // relative file paths resolve against this
  std::string canonical;           // normalized key=value listing
  std::string hash;                // FNV-1a of canonical
};

namespace detail {

struct RawConfig {
  std::map<std::string, std::map<std::string, std::pair<std::string, std::size_t>>> sections;  // value, line
};

inline RawConfig tokenize_config(const std::string& text) {
  static const std::set<std::string> kSections{"scenario", "objective", "penalty", "training", "output"};
  RawConfig raw;
  std::istringstream is(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!kSections.count(section))
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section +
                          "]; valid sections: scenario, objective, penalty, training, output");
      raw.sections[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (const auto hash = value.find(" #"); hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    auto& sec = raw.sections[section];
    if (sec.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + section + "." + key);
    sec[key] = {value, lineno};
  }
  return raw;
}

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  bool has(const std::string& sec, const std::string& key) const {
    auto s = raw_.sections.find(sec);
    return s != raw_.sections.end() && s->second.count(key);
  }

  std::optional<std::string> str(const std::string& sec, const std::string& key) {
    used_.insert(sec + "." + key);
    auto s = raw_.sections.find(sec);
    if (s == raw_.sections.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    if (k->second.first.empty()) throw ConfigError(sec + "." + key + ": value is empty");
    return k->second.first;
  }

  std::string required(const std::string& sec, const std::string& key) {
    auto v = str(sec, key);
    if (!v) throw ConfigError("missing required key " + sec + "." + key);
    return *v;
  }

  std::optional<double> num(const std::string& sec, const std::string& key) {
    auto v = str(sec, key);
    if (!v) return std::nullopt;
    double d = 0;
    if (!parse_double(*v, d) || !std::isfinite(d))
      throw ConfigError(sec + "." + key + ": expected a number, got '" + *v + "'");
    return d;
  }

  std::optional<std::uint64_t> count(const std::string& sec, const std::string& key) {
    auto v = str(sec, key);
    if (!v) return std::nullopt;
    if (v->empty() || !std::all_of(v->begin(), v->end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw ConfigError(sec + "." + key + ": expected a non-negative integer, got '" + *v + "'");
    try {
      return std::stoull(*v);
    } catch (const std::exception&) {
      throw ConfigError(sec + "." + key + ": integer out of range '" + *v + "'");
    }
  }

  std::optional<std::vector<std::string>> list(const std::string& sec, const std::string& key) {
    auto v = str(sec, key);
    if (!v) return std::nullopt;
    auto items = split(*v, ',');
    for (const auto& it : items)
      if (it.empty()) throw ConfigError(sec + "." + key + ": empty list item");
    return items;
  }

  // Keys present but never read.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [sec, keys] : raw_.sections)
      for (const auto& [key, v] : keys)
        if (!used_.count(sec + "." + key)) out.push_back(sec + "." + key);
    return out;
  }

  std::string canonical() const {
    std::string out;
    for (const char* sec : {"scenario", "objective", "penalty", "training", "output"}) {
      auto s = raw_.sections.find(sec);
      if (s == raw_.sections.end()) continue;
      for (const auto& [key, v] : s->second) out += std::string(sec) + "." + key + "=" + v.first + "\n";
    }
    return out;
  }

 private:
  const RawConfig& raw_;
  std::set<std::string> used_;
};

inline std::size_t positive_count(Reader& r, const std::string& sec, const std::string& key, std::size_t dflt) {
  auto v = r.count(sec, key);
  if (!v) return dflt;
  if (*v == 0) throw ConfigError(sec + "." + key + " must be positive");
  return static_cast<std::size_t>(*v);
}

inline double positive_num(Reader& r, const std::string& sec, const std::string& key, double dflt) {
  auto v = r.num(sec, key);
  if (!v) return dflt;
  if (!(*v > 0.0)) throw ConfigError(sec + "." + key + " must be positive");
  return *v;
}

}  // namespace detail

/// Parses and validates a manifest. `base_dir` resolves relative paths.
inline RunManifest parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using detail::positive_count;
  using detail::positive_num;
  const auto raw = detail::tokenize_config(text);
  detail::Reader r(raw);
  RunManifest m;
  m.base_dir = base_dir;

  // [scenario]
  auto& s = m.scenario;
  try {
    s.preset = parse_preset(r.required("scenario", "preset"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("scenario.preset: ") + e.what());
  }
  switch (s.preset) {
    case PresetKind::parallel_lines:
      s.points_per_line = positive_count(r, "scenario", "points_per_line", s.points_per_line);
      if (s.points_per_line < 2) throw ConfigError("scenario.points_per_line must be at least 2");
      s.separation = positive_num(r, "scenario", "separation", s.separation);
      break;
    case PresetKind::two_delta:
      if (auto v = r.num("scenario", "distance")) {
        if (*v < 0.0) throw ConfigError("scenario.distance must be non-negative");
        s.distance = *v;
      }
      break;
    case PresetKind::random_clouds:
      s.n_real = positive_count(r, "scenario", "n_real", s.n_real);
      s.n_fake = positive_count(r, "scenario", "n_fake", s.n_fake);
      s.dim = static_cast<long>(positive_count(r, "scenario", "dim", static_cast<std::size_t>(s.dim)));
      s.spread = positive_num(r, "scenario", "spread", s.spread);
      if (auto v = r.num("scenario", "offset")) s.offset = *v;
      if (auto v = r.count("scenario", "cloud_seed")) s.cloud_seed = *v;
      break;
    case PresetKind::two_gaussians_1d:
      if (auto v = r.num("scenario", "c")) s.c = *v;
      s.sigma = positive_num(r, "scenario", "sigma", s.sigma);
      if (auto v = r.str("scenario", "fake_shape")) {
        if (*v == "box") s.fake_shape = FakeShape::box;
        else if (*v == "gaussian") s.fake_shape = FakeShape::gaussian;
        else throw ConfigError("scenario.fake_shape: unknown shape '" + *v + "'; valid options: box, gaussian");
      }
      if (r.has("scenario", "fake_half_width")) s.fake_half_width = positive_num(r, "scenario", "fake_half_width", 1.0);
      s.field_points = positive_count(r, "scenario", "field_points", s.field_points);
      if (s.field_points < 2) throw ConfigError("scenario.field_points must be at least 2");
      break;
    case PresetKind::image_cloud:
      s.images = r.required("scenario", "images");
      s.n_fake = positive_count(r, "scenario", "n_fake", 10);
      if (auto v = r.count("scenario", "cloud_seed")) s.cloud_seed = *v;
      break;
  }

  // [objective]
  m.objective_name = r.required("objective", "name");
  m.objective_param = r.num("objective", "param");
  try {
    m.training.objective = builtin_objective(m.objective_name, m.objective_param);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("objective.name: ") + e.what());
  }

  // [penalty]
  auto& p = m.training.penalty;
  if (auto v = r.str("penalty", "kind")) {
    try {
      p.kind = parse_penalty_kind(*v);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("penalty.kind: ") + e.what());
    }
  }
  if (auto v = r.num("penalty", "lambda")) {
    if (!(*v > 0.0)) throw ConfigError("penalty.lambda must be positive");
    p.lambda = *v;
  }
  if (auto v = r.num("penalty", "k0")) {
    if (*v < 0.0) throw ConfigError("penalty.k0 must be non-negative");
    p.k0 = *v;
  }
  p.blend_batch = positive_count(r, "penalty", "blend_batch", p.blend_batch);
  p.smax_capacity = positive_count(r, "penalty", "smax_capacity", std::max<std::size_t>(1, p.blend_batch / 2));
  if (p.smax_capacity > 2 * p.blend_batch) throw ConfigError("penalty.smax_capacity must be <= 2 * penalty.blend_batch");

  // [training]
  auto& t = m.training;
  if (auto v = r.count("training", "d_steps")) t.d_steps = static_cast<std::size_t>(*v);
  if (auto v = r.num("training", "eta")) {
    if (*v < 0.0) throw ConfigError("training.eta must be non-negative");
    t.eta = *v;
  }
  if (auto v = r.count("training", "iterations")) t.outer_iterations = static_cast<std::size_t>(*v);
  t.adam.lr = positive_num(r, "training", "lr", t.adam.lr);
  if (auto v = r.num("training", "beta1")) {
    if (!(*v >= 0.0 && *v < 1.0)) throw ConfigError("training.beta1 must be in [0, 1)");
    t.adam.beta1 = *v;
  }
  if (auto v = r.num("training", "beta2")) {
    if (!(*v >= 0.0 && *v < 1.0)) throw ConfigError("training.beta2 must be in [0, 1)");
    t.adam.beta2 = *v;
  }
  t.metric_probes = positive_count(r, "training", "metric_probes", t.metric_probes);
  if (auto v = r.list("training", "hidden")) {
    m.net.hidden.clear();
    for (const auto& item : *v) {
      double w = 0;
      if (!detail::parse_double(item, w) || w < 1 || w != std::floor(w) || w > 1e6)
        throw ConfigError("training.hidden: widths must be positive integers, got '" + item + "'");
      m.net.hidden.push_back(static_cast<int>(w));
    }
  }
  const double slope = r.num("training", "leaky_slope").value_or(0.2);
  if (auto v = r.str("training", "activation")) {
    try {
      m.net.activation = Activation::parse(*v, slope);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("training.activation: ") + e.what());
    }
  } else {
    m.net.activation.slope = slope;
  }
  if (auto v = r.str("training", "init")) {
    if (*v == "he") m.net.init = InitScheme::he;
    else if (*v == "xavier") m.net.init = InitScheme::xavier;
    else throw ConfigError("training.init: unknown scheme '" + *v + "'; valid options: he, xavier");
  }
  if (auto v = r.count("training", "seed")) m.seed = *v;
  m.static_steps = positive_count(r, "training", "static_steps", m.static_steps);
  if (auto v = r.list("training", "surface_activations")) {
    for (const auto& a : *v) {
      try {
        Activation::parse(a);
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("training.surface_activations: ") + e.what());
      }
    }
    m.surface.activations = *v;
  }
  if (auto v = r.list("training", "surface_lrs")) {
    m.surface.lrs.clear();
    for (const auto& item : *v) {
      double lr = 0;
      if (!detail::parse_double(item, lr) || !(lr > 0.0))
        throw ConfigError("training.surface_lrs: learning rates must be positive numbers, got '" + item + "'");
      m.surface.lrs.push_back(lr);
    }
  }
  if (auto v = r.list("training", "surface_depths")) {
    m.surface.depths.clear();
    for (const auto& item : *v) {
      double d = 0;
      if (!detail::parse_double(item, d) || d < 0 || d != std::floor(d) || d > 64)
        throw ConfigError("training.surface_depths: depths must be integers in [0, 64], got '" + item + "'");
      m.surface.depths.push_back(static_cast<std::size_t>(d));
    }
  }

  // [output]
  if (auto v = r.str("output", "dir")) m.output.dir = *v;
  if (auto v = r.count("output", "snapshot_every")) m.output.snapshot_every = static_cast<std::size_t>(*v);
  m.output.lattice_n = positive_count(r, "output", "lattice_n", m.output.lattice_n);
  if (m.output.lattice_n < 2) throw ConfigError("output.lattice_n must be at least 2");

  const auto unused = r.unused();
  if (!unused.empty()) {
    std::string list;
    for (const auto& k : unused) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("unknown keys for preset " + std::string(to_string(s.preset)) + ": " + list);
  }
  try {
    t.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  m.canonical = r.canonical();
  m.hash = fnv1a_hex(m.canonical);
  return m;
}

inline RunManifest load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline Scenario build_scenario(const RunManifest& m) {
  const auto& s = m.scenario;
  switch (s.preset) {
    case PresetKind::parallel_lines: return parallel_lines(s.points_per_line, s.separation);
    case PresetKind::two_delta: return two_delta(s.distance);
    case PresetKind::random_clouds:
      return random_clouds(s.n_real, s.n_fake, s.dim, s.spread, s.offset, s.cloud_seed);
    case PresetKind::two_gaussians_1d: return two_gaussians_1d(s.c, s.sigma, s.fake_shape, s.fake_half_width);
    case PresetKind::image_cloud: {
      std::filesystem::path p(s.images);
      if (p.is_relative()) p = m.base_dir / p;
      std::ifstream in(p);
      if (!in) throw InvalidArgument("scenario.images: cannot open " + p.string());
      try {
        return image_cloud(read_flat_rows(in), s.n_fake, s.cloud_seed);
      } catch (const ParseError& e) {
        throw ParseError(p.string() + ": " + e.what());
      }
    }
  }
  throw InvalidArgument("unhandled preset");
}

inline MlpDiscriminator build_net(const RunManifest& m, int input_dim, Rng& rng) {
  return MlpDiscriminator::init(m.net.widths(input_dim), m.net.activation, m.net.init, rng);
}

}  // namespace lipgan
