#pragma once

// Text formats: point-cloud CSV, metrics CSV, matrices, transport plans, and
// SVG quiver/heatmap figures. Every writer starts with a comment header naming
// the tool version, seed and manifest hash.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lipgan/dynamics.hpp"
#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"
#include "lipgan/transport.hpp"

namespace lipgan {

inline constexpr const char* kVersion = "0.1.0";

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct FileHeader {
  std::uint64_t seed = 0;
  std::string manifest_hash = "none";

  std::string text() const {
    return "lipgan " + std::string(kVersion) + " seed=" + std::to_string(seed) + " manifest=" + manifest_hash;
  }
};

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Strict decimal parse of the whole token.
inline bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(tok, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == tok.size();
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& msg) {
  throw ParseError("line " + std::to_string(line) + ": " + msg);
}

}  // namespace detail

// Point-cloud CSV:
//   # comment lines (ignored)
//   dim=<n>
//   x_1,...,x_n[,weight]      one point per row
// Either every row carries a weight or none does. Weights summing to 1 within
// 1e-12 are kept verbatim; otherwise they are normalized.
inline PointCloud read_cloud_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  long dim = -1;
  std::vector<Point> pts;
  std::vector<double> weights;
  int weighted = -1;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (dim < 0) {
      if (t.rfind("dim=", 0) != 0) detail::parse_fail(lineno, "expected header 'dim=<n>'");
      double d = 0;
      if (!detail::parse_double(t.substr(4), d) || d < 1 || d != std::floor(d))
        detail::parse_fail(lineno, "dimension must be a positive integer");
      dim = static_cast<long>(d);
      continue;
    }
    const auto fields = detail::split(t, ',');
    const long n = static_cast<long>(fields.size());
    if (n != dim && n != dim + 1)
      detail::parse_fail(lineno, "expected " + std::to_string(dim) + " or " + std::to_string(dim + 1) + " fields, got " +
                                     std::to_string(n));
    const int has_w = n == dim + 1 ? 1 : 0;
    if (weighted < 0) weighted = has_w;
    else if (weighted != has_w) detail::parse_fail(lineno, "weight column must be present on every row or none");
    Point p(dim);
    for (long i = 0; i < dim; ++i) {
      double v = 0;
      if (!detail::parse_double(fields[static_cast<std::size_t>(i)], v) || !std::isfinite(v))
        detail::parse_fail(lineno, "bad coordinate '" + fields[static_cast<std::size_t>(i)] + "'");
      p[i] = v;
    }
    if (has_w) {
      double w = 0;
      if (!detail::parse_double(fields.back(), w) || !(w >= 0.0) || !std::isfinite(w))
        detail::parse_fail(lineno, "bad weight '" + fields.back() + "'");
      weights.push_back(w);
    }
    pts.push_back(std::move(p));
  }
  if (dim < 0) throw ParseError("line " + std::to_string(lineno) + ": missing header 'dim=<n>'");
  if (pts.empty()) throw ParseError("line " + std::to_string(lineno) + ": cloud has no points");
  if (weighted != 1) return PointCloud(std::move(pts));
  double total = 0.0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) <= PointCloud::kWeightTolerance) return PointCloud(std::move(pts), std::move(weights));
  return PointCloud::normalized(std::move(pts), std::move(weights));
}

inline PointCloud read_cloud_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  try {
    return read_cloud_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_cloud_csv(std::ostream& os, const PointCloud& c, const FileHeader& h) {
  os << "# " << h.text() << "\n";
  os << "dim=" << c.dim() << "\n";
  const bool weighted = !c.is_uniform();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Point& p = c.point(i);
    for (Eigen::Index d = 0; d < p.size(); ++d) os << (d ? "," : "") << fmt_num(p[d]);
    if (weighted) os << "," << fmt_num(c.weight(i));
    os << "\n";
  }
}

// Image rows: each non-comment line is one flattened image of floats.
inline PointCloud read_flat_rows(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<Point> pts;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = detail::split(t, ',');
    Point p(static_cast<Eigen::Index>(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double v = 0;
      if (!detail::parse_double(fields[i], v) || !std::isfinite(v))
        detail::parse_fail(lineno, "bad value '" + fields[i] + "'");
      p[static_cast<Eigen::Index>(i)] = v;
    }
    if (!pts.empty() && p.size() != pts.front().size())
      detail::parse_fail(lineno, "row has " + std::to_string(p.size()) + " values, expected " +
                                     std::to_string(pts.front().size()));
    pts.push_back(std::move(p));
  }
  if (pts.empty()) throw ParseError("line " + std::to_string(lineno) + ": no image rows");
  return PointCloud(std::move(pts));
}

inline const char* kMetricsColumns = "iteration,w1,mean_f_pg,mean_f_pr,k_emp,j_d";

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows, const FileHeader& h) {
  os << "# " << h.text() << "\n" << kMetricsColumns << "\n";
  for (const auto& r : rows)
    os << r.iteration << "," << fmt_num(r.w1) << "," << fmt_num(r.mean_f_pg) << "," << fmt_num(r.mean_f_pr) << ","
       << fmt_num(r.k_emp) << "," << fmt_num(r.j_d) << "\n";
}

inline std::vector<MetricsRow> read_metrics_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header) {
      if (t != kMetricsColumns) detail::parse_fail(lineno, "expected column header '" + std::string(kMetricsColumns) + "'");
      header = true;
      continue;
    }
    const auto f = detail::split(t, ',');
    if (f.size() != 6) detail::parse_fail(lineno, "expected 6 fields");
    double v[6];
    for (int i = 0; i < 6; ++i)
      if (!detail::parse_double(f[static_cast<std::size_t>(i)], v[i])) detail::parse_fail(lineno, "bad number '" + f[static_cast<std::size_t>(i)] + "'");
    rows.push_back({static_cast<std::size_t>(v[0]), v[1], v[2], v[3], v[4], v[5]});
  }
  if (!header) throw ParseError("line " + std::to_string(lineno) + ": missing column header");
  return rows;
}

inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m, const FileHeader& h,
                             const std::string& note = {}) {
  os << "# " << h.text() << "\n";
  if (!note.empty()) os << "# " << note << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << fmt_num(m(r, c));
    os << "\n";
  }
}

inline Eigen::MatrixXd read_matrix_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> row;
    for (const auto& f : detail::split(t, ',')) {
      double v = 0;
      if (!detail::parse_double(f, v)) detail::parse_fail(lineno, "bad number '" + f + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) detail::parse_fail(lineno, "ragged matrix row");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

/// Non-zero plan entries: pr_index,pg_index,mass.
inline void write_plan_csv(std::ostream& os, const TransportPlan& plan, const FileHeader& h) {
  os << "# " << h.text() << "\n# cost=" << fmt_num(plan.cost) << "\npr_index,pg_index,mass\n";
  for (Eigen::Index i = 0; i < plan.plan.rows(); ++i)
    for (Eigen::Index j = 0; j < plan.plan.cols(); ++j)
      if (plan.plan(i, j) > 0.0) os << i << "," << j << "," << fmt_num(plan.plan(i, j)) << "\n";
}

/// side,index,support_restricted,full_lipschitz.
inline void write_dual_csv(std::ostream& os, const DualPotential& restricted, const DualPotential& full,
                           const FileHeader& h) {
  os << "# " << h.text() << "\n# objective support_restricted=" << fmt_num(restricted.objective)
     << " full_lipschitz=" << fmt_num(full.objective) << "\nside,index,support_restricted,full_lipschitz\n";
  for (std::size_t i = 0; i < restricted.pr_values.size(); ++i)
    os << "real," << i << "," << fmt_num(restricted.pr_values[i]) << "," << fmt_num(full.pr_values[i]) << "\n";
  for (std::size_t j = 0; j < restricted.pg_values.size(); ++j)
    os << "fake," << j << "," << fmt_num(restricted.pg_values[j]) << "," << fmt_num(full.pg_values[j]) << "\n";
}

/// Vector field rows: x_1..x_n,g_1..g_n (failed points carry no row).
inline void write_field_csv(std::ostream& os, const std::vector<std::pair<Point, Point>>& arrows, const FileHeader& h,
                            const std::string& note = {}) {
  os << "# " << h.text() << "\n";
  if (!note.empty()) os << "# " << note << "\n";
  if (arrows.empty()) return;
  const Eigen::Index d = arrows.front().first.size();
  for (Eigen::Index i = 0; i < d; ++i) os << (i ? "," : "") << "x" << i;
  for (Eigen::Index i = 0; i < d; ++i) os << ",g" << i;
  os << "\n";
  for (const auto& [x, g] : arrows) {
    for (Eigen::Index i = 0; i < d; ++i) os << (i ? "," : "") << fmt_num(x[i]);
    for (Eigen::Index i = 0; i < d; ++i) os << "," << fmt_num(g[i]);
    os << "\n";
  }
}

// ---- SVG ----

struct Rgb {
  int r, g, b;
};

/// Fixed five-stop colormap (dark blue, blue, teal, yellow-green, yellow),
/// linearly interpolated on [0, 1].
inline Rgb colormap(double t) {
  static constexpr std::array<Rgb, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  if (!(t >= 0.0)) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double s = t * 4.0;
  const auto i = std::min<std::size_t>(3, static_cast<std::size_t>(s));
  const double u = s - static_cast<double>(i);
  auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * u)); };
  return {mix(stops[i].r, stops[i + 1].r), mix(stops[i].g, stops[i + 1].g), mix(stops[i].b, stops[i + 1].b)};
}

namespace detail {

inline std::string fmt_svg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void svg_open(std::ostream& os, const FileHeader& h, int w, int hgt, const std::string& title) {
  os << "<!-- " << h.text() << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << hgt << "\" viewBox=\"0 0 " << w
     << " " << hgt << "\">\n";
  os << "<title>" << xml_escape(title) << "</title>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << hgt << "\" fill=\"white\"/>\n";
}

}  // namespace detail

/// Maps data coordinates (first two axes) into the drawing area.
struct SvgFrame {
  double x_min, x_max, y_min, y_max;
  int width = 600, height = 600, margin = 30;

  double sx(double x) const { return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin); }
  double sy(double y) const { return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin); }

  static SvgFrame fit(const std::vector<Point>& pts, double pad_frac = 0.15) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& p : pts) {
      x0 = std::min(x0, p[0]);
      x1 = std::max(x1, p[0]);
      const double y = p.size() > 1 ? p[1] : 0.0;
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    const double span = std::max({x1 - x0, y1 - y0, 1e-6});
    const double pad = pad_frac * span;
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const double half = 0.5 * span + pad;
    return {cx - half, cx + half, cy - half, cy + half};
  }
};

/// Real points (blue), particles (red) and arrows along the given gradients
/// (line + triangular head). Arrows are rescaled so the longest spans
/// `arrow_frac` of the frame; zero arrows are omitted.
inline void write_quiver_svg(std::ostream& os, const PointCloud& real, const PointCloud& fake,
                             const std::vector<Point>& grads, const FileHeader& h, const std::string& title,
                             double arrow_frac = 0.12) {
  if (real.dim() < 1 || grads.size() != fake.size()) throw InvalidArgument("quiver: one gradient per particle required");
  std::vector<Point> all = real.points();
  all.insert(all.end(), fake.points().begin(), fake.points().end());
  const SvgFrame fr = SvgFrame::fit(all);
  detail::svg_open(os, h, fr.width, fr.height, title);
  auto coord = [](const Point& p, Eigen::Index i) { return p.size() > i ? p[i] : 0.0; };
  double longest = 0.0;
  for (const auto& g : grads) longest = std::max(longest, std::hypot(coord(g, 0), coord(g, 1)));
  const double scale = longest > 0.0 ? arrow_frac * (fr.x_max - fr.x_min) / longest : 0.0;
  for (const auto& p : real.points())
    os << "<circle cx=\"" << detail::fmt_svg(fr.sx(coord(p, 0))) << "\" cy=\"" << detail::fmt_svg(fr.sy(coord(p, 1)))
       << "\" r=\"4\" fill=\"#1f4e9c\"/>\n";
  for (std::size_t i = 0; i < fake.size(); ++i) {
    const Point& p = fake.point(i);
    const double x0 = fr.sx(coord(p, 0)), y0 = fr.sy(coord(p, 1));
    os << "<circle cx=\"" << detail::fmt_svg(x0) << "\" cy=\"" << detail::fmt_svg(y0) << "\" r=\"4\" fill=\"#c0392b\"/>\n";
    const double gx = coord(grads[i], 0), gy = coord(grads[i], 1);
    if (gx == 0.0 && gy == 0.0) continue;
    const double x1 = fr.sx(coord(p, 0) + scale * gx), y1 = fr.sy(coord(p, 1) + scale * gy);
    os << "<line x1=\"" << detail::fmt_svg(x0) << "\" y1=\"" << detail::fmt_svg(y0) << "\" x2=\"" << detail::fmt_svg(x1)
       << "\" y2=\"" << detail::fmt_svg(y1) << "\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";
    const double ang = std::atan2(y1 - y0, x1 - x0);
    const double hl = 8.0, hw = 0.45;
    const double ax = x1 - hl * std::cos(ang - hw), ay = y1 - hl * std::sin(ang - hw);
    const double bx = x1 - hl * std::cos(ang + hw), by = y1 - hl * std::sin(ang + hw);
    os << "<polygon points=\"" << detail::fmt_svg(x1) << "," << detail::fmt_svg(y1) << " " << detail::fmt_svg(ax) << ","
       << detail::fmt_svg(ay) << " " << detail::fmt_svg(bx) << "," << detail::fmt_svg(by) << "\" fill=\"#333333\"/>\n";
  }
  os << "</svg>\n";
}

/// Closed-form field on a 1-D or 2-D grid: one fixed-length arrow per point
/// along the gradient direction (zero gradients drawn as dots).
inline void write_field_svg(std::ostream& os, const std::vector<std::pair<Point, Point>>& arrows, const FileHeader& h,
                            const std::string& title) {
  std::vector<Point> base;
  for (const auto& a : arrows) base.push_back(a.first);
  if (base.empty()) base.push_back(Point::Zero(1));
  SvgFrame fr = SvgFrame::fit(base, 0.05);
  detail::svg_open(os, h, fr.width, fr.height, title);
  auto coord = [](const Point& p, Eigen::Index i) { return p.size() > i ? p[i] : 0.0; };
  const double len = 0.025 * (fr.x_max - fr.x_min);
  for (std::size_t i = 0; i < arrows.size(); ++i) {
    const Point& x = arrows[i].first;
    const Point& g = arrows[i].second;
    // 1-D fields are staggered vertically so neighbouring arrows stay legible.
    const double y = x.size() > 1 ? x[1] : (i % 2 ? 0.01 : -0.01) * (fr.x_max - fr.x_min);
    const double x0 = fr.sx(coord(x, 0)), y0 = fr.sy(y);
    const double gn = std::hypot(coord(g, 0), coord(g, 1));
    if (gn == 0.0) {
      os << "<circle cx=\"" << detail::fmt_svg(x0) << "\" cy=\"" << detail::fmt_svg(y0) << "\" r=\"1.5\" fill=\"#333333\"/>\n";
      continue;
    }
    const double x1 = fr.sx(coord(x, 0) + len * coord(g, 0) / gn), y1 = fr.sy(y + len * coord(g, 1) / gn);
    os << "<line x1=\"" << detail::fmt_svg(x0) << "\" y1=\"" << detail::fmt_svg(y0) << "\" x2=\"" << detail::fmt_svg(x1)
       << "\" y2=\"" << detail::fmt_svg(y1) << "\" stroke=\"#c0392b\" stroke-width=\"1.2\"/>\n";
    const double ang = std::atan2(y1 - y0, x1 - x0);
    const double ax = x1 - 5.0 * std::cos(ang - 0.5), ay = y1 - 5.0 * std::sin(ang - 0.5);
    const double bx = x1 - 5.0 * std::cos(ang + 0.5), by = y1 - 5.0 * std::sin(ang + 0.5);
    os << "<polygon points=\"" << detail::fmt_svg(x1) << "," << detail::fmt_svg(y1) << " " << detail::fmt_svg(ax) << ","
       << detail::fmt_svg(ay) << " " << detail::fmt_svg(bx) << "," << detail::fmt_svg(by) << "\" fill=\"#c0392b\"/>\n";
  }
  os << "</svg>\n";
}

/// Heatmap of m (row j = y_j, column i = x_i) over the lattice; values are
/// min-max normalized into the fixed colormap.
inline void write_heatmap_svg(std::ostream& os, const Eigen::MatrixXd& m, const Lattice& grid, const FileHeader& h,
                              const std::string& title) {
  if (m.rows() != static_cast<Eigen::Index>(grid.ny) || m.cols() != static_cast<Eigen::Index>(grid.nx))
    throw InvalidArgument("heatmap: matrix shape does not match lattice");
  const int cell = std::max(2, 480 / static_cast<int>(std::max(grid.nx, grid.ny)));
  const int w = cell * static_cast<int>(grid.nx) + 60, hgt = cell * static_cast<int>(grid.ny) + 60;
  detail::svg_open(os, h, w, hgt, title);
  const double lo = m.minCoeff(), hi = m.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const Rgb c = colormap((m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) - lo) / span);
      const int x = 30 + static_cast<int>(i) * cell;
      const int y = 30 + static_cast<int>(grid.ny - 1 - j) * cell;
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
         << c.r << "," << c.g << "," << c.b << ")\"/>\n";
    }
  }
  os << "<text x=\"30\" y=\"20\" font-size=\"12\" font-family=\"monospace\">min " << detail::fmt_svg(lo) << "  max "
     << detail::fmt_svg(hi) << "</text>\n";
  os << "</svg>\n";
}

/// Rows of square grayscale images (flattened row-major, side x side),
/// each image min-max normalized on its own.
inline void write_image_grid_svg(std::ostream& os, const std::vector<std::vector<Point>>& rows, int side,
                                 const FileHeader& h, const std::string& title, int cell = 4) {
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  const int tile = side * cell, gap = 6;
  const int w = 20 + static_cast<int>(cols) * (tile + gap), hgt = 40 + static_cast<int>(rows.size()) * (tile + gap);
  detail::svg_open(os, h, w, hgt, title);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const Point& img = rows[r][c];
      if (img.size() != static_cast<Eigen::Index>(side) * side)
        throw InvalidArgument("image grid: image has " + std::to_string(img.size()) + " values, expected " +
                              std::to_string(side * side));
      const double lo = img.minCoeff(), hi = img.maxCoeff();
      const double span = hi > lo ? hi - lo : 1.0;
      const int ox = 10 + static_cast<int>(c) * (tile + gap), oy = 30 + static_cast<int>(r) * (tile + gap);
      for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
          const int g = static_cast<int>(std::lround(255.0 * (img[y * side + x] - lo) / span));
          os << "<rect x=\"" << ox + x * cell << "\" y=\"" << oy + y * cell << "\" width=\"" << cell << "\" height=\""
             << cell << "\" fill=\"rgb(" << g << "," << g << "," << g << ")\"/>\n";
        }
    }
  }
  os << "</svg>\n";
}

/// Writes `content` to `path` via a temporary file and rename, so readers
/// never see a half-written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + tmp);
    out << content;
    if (!out) throw InvalidArgument("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lipgan
