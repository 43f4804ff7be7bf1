#pragma once

// Executable checks of the gradient-direction theory against solved or trained
// discriminators. Every check returns a TheoremReport; failures carry at least
// one witness.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lipgan/closed_form.hpp"
#include "lipgan/dynamics.hpp"
#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"
#include "lipgan/mlp.hpp"
#include "lipgan/objectives.hpp"
#include "lipgan/transport.hpp"

namespace lipgan {

using ScalarField = std::function<double(const Point&)>;

enum class Side { fake, real };

inline const char* to_string(Side s) { return s == Side::fake ? "fake" : "real"; }

struct TaggedPoint {
  Point x;
  Side side = Side::fake;
  std::size_t index = 0;
};

/// slack = k * |x - y| - |f(y) - f(x)|.
struct BoundingPair {
  TaggedPoint x;
  TaggedPoint y;
  double slack = 0.0;
  bool tight = false;
};

struct TheoremReport {
  std::string id;
  bool pass = false;
  std::string detail;
  std::vector<std::pair<std::string, double>> tolerances;
  std::vector<std::string> witnesses;

  bool operator==(const TheoremReport&) const = default;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_point(const Point& p) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i) s += " ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", p[i]);
    s += buf;
  }
  return s + ")";
}

inline std::string quote_field(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else if (c == '\\' && i + 1 < line.size() && (line[i + 1] == 'n' || line[i + 1] == '\\')) {
        cur += line[i + 1] == 'n' ? '\n' : '\\';
        ++i;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("report line has an unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail

// Record: id,pass,"detail","name=value;name=value","witness",...
inline std::string serialize(const TheoremReport& r) {
  std::string tol;
  for (const auto& [name, v] : r.tolerances) {
    if (!tol.empty()) tol += ";";
    tol += name + "=" + detail::fmt_double(v);
  }
  std::string line = r.id + "," + (r.pass ? "true" : "false") + "," + detail::quote_field(r.detail) + "," +
                     detail::quote_field(tol);
  for (const auto& w : r.witnesses) line += "," + detail::quote_field(w);
  return line;
}

inline TheoremReport parse_report_line(const std::string& line) {
  const auto f = detail::split_fields(line);
  if (f.size() < 4) throw ParseError("report line needs at least 4 fields: " + line);
  TheoremReport r;
  r.id = f[0];
  if (f[1] == "true") r.pass = true;
  else if (f[1] == "false") r.pass = false;
  else throw ParseError("report pass field must be true or false, got '" + f[1] + "'");
  r.detail = f[2];
  std::stringstream ts(f[3]);
  for (std::string item; std::getline(ts, item, ';');) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("bad tolerance entry '" + item + "'");
    r.tolerances.emplace_back(item.substr(0, eq), std::stod(item.substr(eq + 1)));
  }
  r.witnesses.assign(f.begin() + 4, f.end());
  return r;
}

inline std::string serialize(const std::vector<TheoremReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += serialize(r) + "\n";
  return out;
}

inline std::vector<TheoremReport> parse_reports(const std::string& text) {
  std::vector<TheoremReport> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_report_line(line));
  }
  return out;
}

inline ScalarField net_field(const MlpDiscriminator& net) {
  return [&net](const Point& x) { return forward(net, x); };
}

/// f defined only on support points, e.g. LP potentials; exact coordinate lookup.
inline ScalarField support_field(const PointCloud& pr, const PointCloud& pg, std::vector<double> pr_values,
                                 std::vector<double> pg_values) {
  return [pr, pg, prv = std::move(pr_values), pgv = std::move(pg_values)](const Point& x) {
    for (std::size_t i = 0; i < pr.size(); ++i)
      if (pr.point(i) == x) return prv.at(i);
    for (std::size_t j = 0; j < pg.size(); ++j)
      if (pg.point(j) == x) return pgv.at(j);
    throw InvalidArgument("support_field: point is not a support point");
  };
}

struct BoundingResult {
  std::vector<BoundingPair> pairs;  // best partner per support point (fake first, then real)
  TheoremReport disjoint;           // every disjoint-support point has a tight partner
  TheoremReport chain;              // tight chains from fake points climb to real points
  double fake_real_tight_fraction = 0.0;
};

namespace detail {

inline bool in_cloud(const PointCloud& c, const Point& x) {
  for (const auto& p : c.points())
    if (p == x) return true;
  return false;
}

}  // namespace detail

/// For each support point finds the partner maximizing |f(y) - f(x)| / |x - y|.
/// A pair is tight when that ratio is at least (1 - tol) * k.
inline BoundingResult check_bounding(const ScalarField& f, const PointCloud& pg, const PointCloud& pr, double k,
                                     double tol = 0.05) {
  if (!(k > 0.0)) throw InvalidArgument("check_bounding: k must be positive");
  std::vector<TaggedPoint> pts;
  for (std::size_t i = 0; i < pg.size(); ++i) pts.push_back({pg.point(i), Side::fake, i});
  for (std::size_t i = 0; i < pr.size(); ++i) pts.push_back({pr.point(i), Side::real, i});
  const std::size_t n = pts.size();
  std::vector<double> fv(n);
  for (std::size_t i = 0; i < n; ++i) fv[i] = f(pts[i].x);

  auto is_tight = [&](std::size_t a, std::size_t b, double d) {
    return std::abs(fv[b] - fv[a]) >= (1.0 - tol) * k * d;
  };

  BoundingResult out;
  std::vector<std::vector<std::size_t>> tight_adj(n);
  std::size_t fake_with_real = 0;
  std::size_t disjoint_fail = 0;
  std::vector<std::string> disjoint_witness;
  for (std::size_t a = 0; a < n; ++a) {
    double best_ratio = -1.0, best_real_ratio = -1.0;
    std::size_t best = n;
    for (std::size_t b = 0; b < n; ++b) {
      const double d = euclidean(pts[a].x, pts[b].x);
      if (d == 0.0) continue;
      const double ratio = std::abs(fv[b] - fv[a]) / d;
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = b;
      }
      if (pts[b].side == Side::real) best_real_ratio = std::max(best_real_ratio, ratio);
      if (is_tight(a, b, d)) tight_adj[a].push_back(b);
    }
    const bool disjoint =
        pts[a].side == Side::fake ? !detail::in_cloud(pr, pts[a].x) : !detail::in_cloud(pg, pts[a].x);
    if (pts[a].side == Side::fake && best_real_ratio >= (1.0 - tol) * k) ++fake_with_real;
    if (best == n) {
      if (disjoint) {
        ++disjoint_fail;
        if (disjoint_witness.size() < 8)
          disjoint_witness.push_back(std::string(to_string(pts[a].side)) + " " + std::to_string(pts[a].index) +
                                     " has no partner");
      }
      continue;
    }
    const double d = euclidean(pts[a].x, pts[best].x);
    BoundingPair bp{pts[a], pts[best], k * d - std::abs(fv[best] - fv[a]), is_tight(a, best, d)};
    if (disjoint && !bp.tight) {
      ++disjoint_fail;
      if (disjoint_witness.size() < 8)
        disjoint_witness.push_back(std::string(to_string(pts[a].side)) + " " + std::to_string(pts[a].index) + " " +
                                   detail::fmt_point(pts[a].x) + " best ratio " + detail::fmt_double(best_ratio));
    }
    out.pairs.push_back(std::move(bp));
  }
  out.fake_real_tight_fraction = static_cast<double>(fake_with_real) / static_cast<double>(pg.size());

  out.disjoint.id = "bounding";
  out.disjoint.pass = disjoint_fail == 0;
  out.disjoint.detail = std::to_string(disjoint_fail) + " disjoint-support points without a tight partner; " +
                        "fake points with a tight real partner: " + detail::fmt_double(out.fake_real_tight_fraction);
  out.disjoint.tolerances = {{"k", k}, {"tol", tol}};
  out.disjoint.witnesses = std::move(disjoint_witness);

  // Climbing tight edges (strictly increasing f) from a fake point
  // must reach a real point.
  std::size_t chain_fail = 0;
  std::vector<std::string> chain_witness;
  for (std::size_t a = 0; a < pg.size(); ++a) {
    std::vector<char> seen(n, 0);
    std::queue<std::size_t> q;
    q.push(a);
    seen[a] = 1;
    bool reached = false;
    while (!q.empty() && !reached) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v : tight_adj[u]) {
        if (seen[v] || !(fv[v] > fv[u])) continue;
        if (pts[v].side == Side::real && fv[v] > fv[a]) {
          reached = true;
          break;
        }
        seen[v] = 1;
        q.push(v);
      }
    }
    if (!reached) {
      ++chain_fail;
      if (chain_witness.size() < 8)
        chain_witness.push_back("fake " + std::to_string(a) + " " + detail::fmt_point(pts[a].x) +
                                " reaches no real point along tight chains");
    }
  }
  out.chain.id = "tight_chain";
  out.chain.pass = chain_fail == 0;
  out.chain.detail = std::to_string(chain_fail) + " of " + std::to_string(pg.size()) +
                     " fake points reach no real point along tight chains";
  out.chain.tolerances = {{"k", k}, {"tol", tol}};
  out.chain.witnesses = std::move(chain_witness);
  return out;
}

/// Real point maximizing (f(y) - f(x)) / |y - x|; the partner whose bounding
/// relation drives the gradient at x.
inline std::size_t tight_real_partner(const ScalarField& f, const Point& x, const PointCloud& pr) {
  const double fx = f(x);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < pr.size(); ++i) {
    const double d = euclidean(x, pr.point(i));
    if (d == 0.0) continue;
    const double r = (f(pr.point(i)) - fx) / d;
    if (r > best) {
      best = r;
      arg = i;
    }
  }
  return arg;
}

/// Gradient at x_t = t x + (1 - t) y, t = 0, 1/steps, ..., 1, must have norm in
/// [k(1 - tol), k(1 + tol)] and cosine >= 1 - tol with (y - x).
inline TheoremReport check_interpolation_gradient(const MlpDiscriminator& net, const Point& x, const Point& y,
                                                  double k, std::size_t steps = 10, double tol = 0.1) {
  if (x == y) throw InvalidArgument("check_interpolation_gradient: x and y must differ");
  if (steps < 1) throw InvalidArgument("check_interpolation_gradient: steps must be >= 1");
  TheoremReport r;
  r.id = "interpolation";
  r.tolerances = {{"k", k}, {"tol", tol}};
  const Point dir = y - x;
  std::vector<Point> xs;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    xs.push_back(y + t * (x - y));
  }
  const auto grads = grad_input_batch(net, xs);
  double min_cos = 2.0, min_norm = std::numeric_limits<double>::infinity(), max_norm = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double nrm = grads[i].norm();
    const double c = nrm == 0.0 ? 0.0 : cosine(grads[i], dir);
    min_cos = std::min(min_cos, c);
    min_norm = std::min(min_norm, nrm);
    max_norm = std::max(max_norm, nrm);
    const bool ok = nrm >= k * (1.0 - tol) && nrm <= k * (1.0 + tol) && c >= 1.0 - tol;
    if (!ok)
      r.witnesses.push_back("t=" + detail::fmt_double(static_cast<double>(i) / static_cast<double>(steps)) +
                            " norm=" + detail::fmt_double(nrm) + " cos=" + detail::fmt_double(c));
  }
  r.pass = r.witnesses.empty();
  r.detail = "norm range [" + detail::fmt_double(min_norm) + ", " + detail::fmt_double(max_norm) +
             "], min cosine " + detail::fmt_double(min_cos);
  return r;
}

/// g(x, y) = x + y is 1-Lipschitz under l1 and tight between A = (0,0) and
/// B = (2,1), yet its gradient (1,1) does not point from A to B.
inline TheoremReport l1_counterexample(std::size_t random_pairs = 10000, std::uint64_t seed = 7) {
  TheoremReport r;
  r.id = "l1_counterexample";
  const MlpDiscriminator g = MlpDiscriminator::affine(make_point({1.0, 1.0}), 0.0);
  Rng rng(seed);
  double min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < random_pairs; ++i) {
    const Point p = make_point({rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)});
    const Point q = make_point({rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)});
    const double slack = l1_distance(p, q) - std::abs(forward(g, p) - forward(g, q));
    min_slack = std::min(min_slack, slack);
  }
  const Point a = make_point({0.0, 0.0});
  const Point b = make_point({2.0, 1.0});
  const double gap = forward(g, b) - forward(g, a);
  const double l1 = l1_distance(a, b);
  const double cos = cosine(grad_input(g, a), b - a);
  const double expected_cos = 3.0 / std::sqrt(10.0);
  // Random pairs only need to hold up to floating-point roundoff.
  const bool lipschitz = min_slack >= -1e-12;
  const bool tight = gap == 3.0 && l1 == 3.0;
  const bool misaligned = std::abs(cos - expected_cos) <= 1e-12 && cos < 1.0;
  r.pass = lipschitz && tight && misaligned;
  r.tolerances = {{"cosine_tol", 1e-12}};
  r.detail = "min l1 slack " + detail::fmt_double(min_slack) + "; g(B)-g(A)=" + detail::fmt_double(gap) +
             " l1(A,B)=" + detail::fmt_double(l1) + "; cosine=" + detail::fmt_double(cos);
  if (!lipschitz) r.witnesses.push_back("l1 Lipschitz violated, min slack " + detail::fmt_double(min_slack));
  if (!tight) r.witnesses.push_back("pair not tight: gap " + detail::fmt_double(gap));
  if (!misaligned) r.witnesses.push_back("cosine " + detail::fmt_double(cos));
  return r;
}

/// Passes when W1(particles, target) <= tol_w and the empirical k <= tol_k.
inline TheoremReport check_nash_convergence(const FlowState& final_state, double tol_w, double tol_k,
                                            std::size_t probes = 1024, std::uint64_t seed = 11) {
  TheoremReport r;
  r.id = "nash";
  r.tolerances = {{"tol_w", tol_w}, {"tol_k", tol_k}};
  const double w = w1(final_state.target, final_state.particles);
  Rng rng(seed);
  const double k = estimate_k(final_state.net, final_state.particles, final_state.target, probes, rng);
  r.pass = w <= tol_w && k <= tol_k;
  r.detail = "W1=" + detail::fmt_double(w) + " k=" + detail::fmt_double(k);
  if (w > tol_w) r.witnesses.push_back("W1 " + detail::fmt_double(w) + " > " + detail::fmt_double(tol_w));
  if (k > tol_k) r.witnesses.push_back("k " + detail::fmt_double(k) + " > " + detail::fmt_double(tol_k));
  return r;
}

/// Zero-gradient branch on overlapping support: P_g(x) phi'(f(x)) +
/// P_r(x) varphi'(f(x)) must vanish (relative to P_g + P_r). Points where
/// both densities are below the floor are excluded and counted.
inline TheoremReport check_stationarity(const ObjectiveSpec& obj, const ScalarField& f, const AnalyticDensity& pg,
                                        const AnalyticDensity& pr, const std::vector<Point>& points,
                                        double tol = 1e-9, double floor = 1e-12) {
  TheoremReport r;
  r.id = "stationarity";
  r.tolerances = {{"tol", tol}, {"density_floor", floor}};
  std::size_t excluded = 0, checked = 0;
  double worst = 0.0;
  for (const auto& x : points) {
    const double g = density_value(pg, x);
    const double p = density_value(pr, x);
    if (g < floor && p < floor) {
      ++excluded;
      continue;
    }
    ++checked;
    const double fx = f(x);
    const double res = std::abs(g * obj.phi_d1(fx) + p * obj.varphi_d1(fx)) / (g + p);
    worst = std::max(worst, res);
    if (res > tol && r.witnesses.size() < 8)
      r.witnesses.push_back(detail::fmt_point(x) + " residual " + detail::fmt_double(res));
  }
  r.pass = checked > 0 && r.witnesses.empty();
  if (checked == 0) r.witnesses.push_back("no point above the density floor");
  r.detail = std::to_string(checked) + " points checked, " + std::to_string(excluded) +
             " excluded below the density floor, worst relative residual " + detail::fmt_double(worst);
  return r;
}

/// Fully overlapping supports: if P_g != P_r some pair must be tight;
/// if P_g == P_r the optimum is flat (k <= tol).
inline TheoremReport check_overlap_bounding(const ScalarField& f, const PointCloud& pg, const PointCloud& pr,
                                            double k, double tol = 0.05) {
  TheoremReport r;
  r.id = "overlap_bounding";
  r.tolerances = {{"k", k}, {"tol", tol}};
  bool same = pg.size() == pr.size();
  for (std::size_t i = 0; same && i < pg.size(); ++i)
    same = pg.point(i) == pr.point(i) && std::abs(pg.weight(i) - pr.weight(i)) <= PointCloud::kWeightTolerance;
  if (same) {
    r.pass = k <= tol;
    r.detail = "identical distributions; k=" + detail::fmt_double(k);
    if (!r.pass) r.witnesses.push_back("non-flat optimum with k " + detail::fmt_double(k));
    return r;
  }
  if (!(k > 0.0)) {
    r.pass = false;
    r.detail = "distributions differ but k=0";
    r.witnesses.push_back("flat f on differing distributions");
    return r;
  }
  const auto res = check_bounding(f, pg, pr, k, tol);
  std::size_t tight = 0;
  const BoundingPair* example = nullptr;
  for (const auto& bp : res.pairs)
    if (bp.tight) {
      ++tight;
      if (!example) example = &bp;
    }
  r.pass = tight > 0;
  r.detail = std::to_string(tight) + " support points with a tight partner";
  if (example)
    r.detail += "; e.g. " + detail::fmt_point(example->x.x) + " - " + detail::fmt_point(example->y.x);
  else
    r.witnesses.push_back("no tight pair although the distributions differ");
  return r;
}

/// Outcome of f* at x: the value and gradient as exact text, or the error.
inline std::string closed_form_outcome(const ClosedFormSpec& spec, const AnalyticDensity& pg,
                                       const AnalyticDensity& pr, const Point& x) {
  try {
    std::string out = "value " + detail::fmt_double(fstar_value(spec, pg, pr, x)) + " grad";
    const Point g = fstar_grad(spec, pg, pr, x);
    for (Eigen::Index i = 0; i < g.size(); ++i) out += " " + detail::fmt_double(g[i]);
    return out;
  } catch (const OffSupportError& e) {
    return std::string("off-support: ") + e.what();
  }
}

/// Translating P_r must leave f* (value, gradient, or off-support outcome)
/// bit-identical at every probe point inside P_g's support.
inline TheoremReport check_disjoint_invariance(const ClosedFormSpec& spec, const AnalyticDensity& pg,
                                               const AnalyticDensity& pr, const Point& offset,
                                               const std::vector<Point>& probes) {
  TheoremReport r;
  r.id = "disjoint_support_invariance";
  const AnalyticDensity moved = pr.translated(offset);
  std::size_t same = 0;
  for (const auto& x : probes) {
    const std::string before = closed_form_outcome(spec, pg, pr, x);
    const std::string after = closed_form_outcome(spec, pg, moved, x);
    if (before == after) ++same;
    else if (r.witnesses.size() < 8) r.witnesses.push_back(detail::fmt_point(x) + ": " + before + " vs " + after);
  }
  r.pass = !probes.empty() && same == probes.size();
  r.detail = std::string(to_string(spec.kind)) + ": " + std::to_string(same) + "/" + std::to_string(probes.size()) +
             " probe outcomes unchanged after translating P_r by " + detail::fmt_point(offset);
  return r;
}

}  // namespace lipgan
