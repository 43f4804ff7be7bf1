#pragma once

// Subcommand implementations behind the lipgan CLI. Every run buffers its
// files in memory and writes them only after it completes, so a failed or
// rejected run never leaves partial output behind.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lipgan/closed_form.hpp"
#include "lipgan/config.hpp"
#include "lipgan/dynamics.hpp"
#include "lipgan/io.hpp"
#include "lipgan/lipschitz.hpp"
#include "lipgan/objectives.hpp"
#include "lipgan/scenario.hpp"
#include "lipgan/transport.hpp"
#include "lipgan/verify.hpp"

namespace lipgan::app {

struct Options {
  std::optional<std::uint64_t> seed;           // overrides the manifest seed
  std::optional<std::filesystem::path> out_dir;  // overrides output.dir
  bool quiet = false;
};

/// Relative path -> file content, flushed in one go.
class OutputSet {
 public:
  void add(const std::string& rel, std::string content) { files_[rel] = std::move(content); }
  const std::map<std::string, std::string>& files() const { return files_; }
  bool has(const std::string& rel) const { return files_.count(rel) > 0; }
  const std::string& at(const std::string& rel) const { return files_.at(rel); }

  void write_all(const std::filesystem::path& root) const {
    for (const auto& [rel, content] : files_) write_file_atomic(root / rel, content);
  }

 private:
  std::map<std::string, std::string> files_;
};

struct RunContext {
  RunManifest manifest;
  std::string stem;
  std::uint64_t seed = 1;
  FileHeader header;
  std::filesystem::path out_root;  // this run's directory

  // Manifest, seed and header together; used by tests that skip config files.
  static RunContext from_manifest(RunManifest m, std::string stem, const Options& opts = {}) {
    RunContext c;
    c.seed = opts.seed.value_or(m.seed);
    c.header = FileHeader{c.seed, m.hash};
    c.out_root = opts.out_dir.value_or(std::filesystem::path(m.output.dir)) / stem;
    c.stem = std::move(stem);
    c.manifest = std::move(m);
    return c;
  }
};

/// Parses every config before anything runs; the first error aborts all.
inline std::vector<RunContext> prepare_runs(const std::vector<std::string>& config_paths, const Options& opts) {
  std::vector<RunContext> runs;
  std::set<std::string> stems;
  for (const auto& path : config_paths) {
    const std::filesystem::path p(path);
    std::string stem = p.stem().string();
    if (!stems.insert(stem).second)
      throw InvalidArgument("two configs share the run name '" + stem + "'; rename one of them");
    runs.push_back(RunContext::from_manifest(load_config(p), std::move(stem), opts));
  }
  return runs;
}

namespace detail {

template <class Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

inline Lattice fit_lattice(const std::vector<Point>& pts, std::size_t n, double pad_frac = 0.25) {
  Lattice g;
  g.x_min = g.y_min = std::numeric_limits<double>::infinity();
  g.x_max = g.y_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    g.x_min = std::min(g.x_min, p[0]);
    g.x_max = std::max(g.x_max, p[0]);
    g.y_min = std::min(g.y_min, p[1]);
    g.y_max = std::max(g.y_max, p[1]);
  }
  const double span = std::max({g.x_max - g.x_min, g.y_max - g.y_min, 1e-6});
  g.x_min -= pad_frac * span;
  g.x_max += pad_frac * span;
  g.y_min -= pad_frac * span;
  g.y_max += pad_frac * span;
  g.nx = g.ny = n;
  return g;
}

inline std::vector<Point> all_points(const PointCloud& a, const PointCloud& b) {
  std::vector<Point> out = a.points();
  out.insert(out.end(), b.points().begin(), b.points().end());
  return out;
}

inline std::string lattice_note(const Lattice& g) {
  return "lattice x=[" + fmt_num(g.x_min) + "," + fmt_num(g.x_max) + "] y=[" + fmt_num(g.y_min) + "," +
         fmt_num(g.y_max) + "] rows=y cols=x";
}

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

/// Discriminator-only training: `steps` Adam steps with the particles fixed.
inline FlowState train_static(FlowState state, TrainConfig cfg, std::size_t steps, Rng& rng) {
  cfg.d_steps = steps;
  cfg.validate();
  return train_discriminator(std::move(state), cfg, rng);
}

inline FlowState initial_state(const RunManifest& m, const Scenario& sc, Rng& rng) {
  if (!sc.is_discrete()) throw InvalidArgument(std::string("preset ") + to_string(sc.preset) + " has no point clouds to train on");
  MlpDiscriminator net = build_net(m, static_cast<int>(sc.dim), rng);
  return FlowState(*sc.fake_cloud, *sc.real_cloud, std::move(net), m.training.penalty.smax_capacity);
}

// ---- ot ----

struct OtResult {
  double primal = 0.0;
  double dual_restricted = 0.0;
  double dual_full = 0.0;
  bool equal = false;
  OutputSet files;
};

inline OtResult ot_outputs(const PointCloud& pr, const PointCloud& pg, const FileHeader& h) {
  OtResult r;
  const TransportPlan plan = w1_primal(pr, pg);
  const DualPotential dr = w1_dual(pr, pg, ConstraintMode::support_restricted);
  const DualPotential df = w1_dual(pr, pg, ConstraintMode::full_lipschitz);
  r.primal = plan.cost;
  r.dual_restricted = dr.objective;
  r.dual_full = df.objective;
  r.equal = std::abs(dr.objective - plan.cost) <= 1e-6 && std::abs(df.objective - plan.cost) <= 1e-6;
  r.files.add("plan.csv", detail::render([&](std::ostream& os) { write_plan_csv(os, plan, h); }));
  r.files.add("dual.csv", detail::render([&](std::ostream& os) { write_dual_csv(os, dr, df, h); }));
  return r;
}

inline int cmd_ot(const std::string& real_path, const std::string& fake_path, const Options& opts, std::ostream& out) {
  const PointCloud pr = read_cloud_file(real_path);
  const PointCloud pg = read_cloud_file(fake_path);
  std::ifstream a(real_path), b(fake_path);
  std::ostringstream both;
  both << a.rdbuf() << '\n' << b.rdbuf();
  const FileHeader h{opts.seed.value_or(0), fnv1a_hex(both.str())};
  const OtResult r = ot_outputs(pr, pg, h);
  const auto root = opts.out_dir.value_or("out");
  r.files.write_all(root);
  out << "W1 = " << fmt_num(r.primal) << "\n";
  out << "dual support_restricted = " << fmt_num(r.dual_restricted) << "\n";
  out << "dual full_lipschitz = " << fmt_num(r.dual_full) << "\n";
  out << "primal/dual equal within 1e-6: " << (r.equal ? "yes" : "NO") << "\n";
  if (!opts.quiet) out << "wrote " << (root / "plan.csv").string() << ", " << (root / "dual.csv").string() << "\n";
  return r.equal ? 0 : 1;
}

// ---- family ----

inline void print_membership(const MembershipReport& rep, const std::string& name, std::ostream& out) {
  out << name << ": " << (rep.is_member ? "member" : "non-member") << "\n";
  if (rep.anchor_a) out << "anchor a = " << fmt_num(*rep.anchor_a) << "\n";
  else out << "anchor a = none\n";
  out << "violations: " << rep.violation_count << "\n";
  for (const auto& v : rep.violations)
    out << "  " << v.condition << " at x=" << fmt_num(v.probe) << " (observed " << fmt_num(v.observed) << ")\n";
}

inline int cmd_family(const std::string& name, std::optional<double> param, std::ostream& out) {
  const ObjectiveSpec obj = builtin_objective(name, param);
  print_membership(check_membership(obj), obj.name, out);
  return 0;
}

// ---- flow ----

/// Gradient fields of the closed-form optima over a 1-D grid.
inline OutputSet closed_form_outputs(const Scenario& sc, const RunManifest& m, const FileHeader& h) {
  const auto& s = m.scenario;
  const double lo = -std::abs(s.c) - 4.0 * s.sigma, hi = std::abs(s.c) + 4.0 * s.sigma;
  std::vector<Point> grid;
  for (std::size_t i = 0; i < s.field_points; ++i)
    grid.push_back(make_point({lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(s.field_points - 1)}));
  const AnalyticDensity& pr = *sc.real_density;
  const AnalyticDensity& pg = *sc.fake_density;
  // Uniform reference measure strictly containing the grid.
  const AnalyticDensity mu = AnalyticDensity::uniform_box(make_point({lo - 1.0}), make_point({hi + 1.0}));
  OutputSet files;
  files.add("densities.csv", detail::render([&](std::ostream& os) {
              os << "# " << h.text() << "\nx,p_r,p_g\n";
              for (const auto& x : grid)
                os << fmt_num(x[0]) << "," << fmt_num(pr.value(x)) << "," << fmt_num(pg.value(x)) << "\n";
            }));
  for (const ClosedFormSpec& spec :
       {ClosedFormSpec::js(), ClosedFormSpec::least_squares(0.0, 1.0), ClosedFormSpec::fisher(mu)}) {
    const GradField field = grad_field(spec, pg, pr, grid);
    const std::string kind = to_string(spec.kind);
    const std::string note = kind + ": " + std::to_string(field.arrows.size()) + " defined, " +
                             std::to_string(field.failures.size()) + " off-support grid points omitted";
    files.add("field_" + kind + ".csv",
              detail::render([&](std::ostream& os) { write_field_csv(os, field.arrows, h, note); }));
    files.add("field_" + kind + ".svg",
              detail::render([&](std::ostream& os) { write_field_svg(os, field.arrows, h, "grad f* (" + kind + ")"); }));
  }
  return files;
}

/// Per fake image: x, grad f(x), x + eps grad f(x) for eps up to 5/4 of the
/// step closest to its tight real partner y, then y. Records
/// cosine(grad f(x), y - x), how close the path passes to y, and the
/// nearest real image for comparison.
struct ImageGradientRow {
  std::size_t fake_index = 0;
  std::size_t partner = 0;  // tight real partner under f
  std::size_t nearest_real = 0;
  double cosine = 0.0;
  double closest_ratio = 0.0;  // min_eps |x + eps g - y| / |x - y|
};

inline std::vector<ImageGradientRow> image_gradient_artifact(const MlpDiscriminator& net, const PointCloud& pg,
                                                             const PointCloud& pr, const FileHeader& h,
                                                             OutputSet& files) {
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(pg.dim()))));
  const bool square = static_cast<Eigen::Index>(side) * side == pg.dim();
  const auto grads = grad_input_batch(net, pg.points());
  const ScalarField f = net_field(net);
  std::vector<ImageGradientRow> out;
  std::vector<std::vector<Point>> grid;
  for (std::size_t i = 0; i < pg.size(); ++i) {
    const Point& x = pg.point(i);
    const Point& g = grads[i];
    ImageGradientRow row;
    row.fake_index = i;
    row.partner = tight_real_partner(f, x, pr);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pr.size(); ++j) {
      const double d = euclidean(x, pr.point(j));
      if (d < best) best = d, row.nearest_real = j;
    }
    const Point& y = pr.point(row.partner);
    const double gg = g.squaredNorm();
    const double t_star = gg > 0.0 ? std::max(0.0, g.dot(y - x) / gg) : 0.0;
    row.cosine = gg > 0.0 ? cosine(g, y - x) : 0.0;
    row.closest_ratio = euclidean(x + t_star * g, y) / euclidean(x, y);
    out.push_back(row);
    std::vector<Point> images{x, g};
    for (int s = 1; s <= 5; ++s) images.push_back(x + (t_star * s / 4.0) * g);
    images.push_back(y);
    grid.push_back(std::move(images));
  }
  files.add("image_gradients.csv", detail::render([&](std::ostream& os) {
              os << "# " << h.text() << "\nfake_index,partner,nearest_real,cosine,closest_ratio\n";
              for (const auto& r : out)
                os << r.fake_index << "," << r.partner << "," << r.nearest_real << "," << fmt_num(r.cosine) << ","
                   << fmt_num(r.closest_ratio) << "\n";
            }));
  if (square)
    files.add("image_rows.svg", detail::render([&](std::ostream& os) {
                write_image_grid_svg(os, grid, side, h, "x, grad f(x), x + eps grad f(x), tight real partner");
              }));
  return out;
}

struct FlowResult {
  OutputSet files;
  std::vector<MetricsRow> history;
  std::optional<FlowState> final_state;  // empty for closed-form runs
};

inline bool is_snapshot(std::size_t it, std::size_t every, std::size_t last) {
  return it == 0 || it == last || (every > 0 && it % every == 0);
}

inline FlowResult run_flow(const RunContext& ctx, std::ostream* log = nullptr) {
  const RunManifest& m = ctx.manifest;
  const FileHeader& h = ctx.header;
  const Scenario sc = build_scenario(m);
  FlowResult res;
  if (!sc.is_discrete()) {
    res.files = closed_form_outputs(sc, m, h);
    if (log) *log << "[" << ctx.stem << "] closed-form fields written for js, least_squares, fisher\n";
    return res;
  }
  Rng rng(ctx.seed);
  FlowState state = initial_state(m, sc, rng);
  if (sc.preset == PresetKind::image_cloud) {
    // Image clouds first get a fully trained discriminator on the initial
    // noise, whose gradients are rendered before the flow starts.
    if (log) *log << "[" << ctx.stem << "] training discriminator for " << m.static_steps << " steps on the image cloud\n";
    state = train_static(std::move(state), m.training, m.static_steps, rng);
    const auto rows = image_gradient_artifact(state.net, state.particles, state.target, h, res.files);
    if (log) {
      double mean_cos = 0.0;
      for (const auto& r : rows) mean_cos += r.cosine / static_cast<double>(rows.size());
      *log << "[" << ctx.stem << "] mean cosine of grad f with the tight real partner: " << detail::fmt_short(mean_cos) << "\n";
    }
  }
  const std::size_t last = m.training.outer_iterations;
  const std::size_t every = m.output.snapshot_every;
  const Eigen::Index dim = sc.dim;
  const bool full_trajectory = dim <= 3;
  const Lattice lattice = detail::fit_lattice(detail::all_points(*sc.real_cloud, *sc.fake_cloud), m.output.lattice_n);

  std::ostringstream traj;
  traj << "# " << h.text() << "\n# "
       << (full_trajectory ? "every iteration" : "snapshot iterations only") << "\niteration,index";
  for (Eigen::Index d = 0; d < dim; ++d) traj << ",x" << d;
  traj << "\n";

  auto observer = [&](const FlowState& s) {
    const bool snap = is_snapshot(s.iteration, every, last);
    if (full_trajectory || snap) {
      for (std::size_t i = 0; i < s.particles.size(); ++i) {
        traj << s.iteration << "," << i;
        const Point& p = s.particles.point(i);
        for (Eigen::Index d = 0; d < dim; ++d) traj << "," << fmt_num(p[d]);
        traj << "\n";
      }
    }
    if (!snap) return;
    char tag[32];
    std::snprintf(tag, sizeof tag, "%06zu", s.iteration);
    const auto grads = grad_input_batch(s.net, s.particles.points());
    res.files.add(std::string("quiver_") + tag + ".svg", detail::render([&](std::ostream& os) {
                    write_quiver_svg(os, s.target, s.particles, grads, h,
                                     ctx.stem + " iteration " + std::to_string(s.iteration));
                  }));
    if (dim == 2) {
      const Eigen::MatrixXd surf = value_surface(s.net, lattice);
      res.files.add(std::string("surface_") + tag + ".csv",
                    detail::render([&](std::ostream& os) { write_matrix_csv(os, surf, h, detail::lattice_note(lattice)); }));
      res.files.add(std::string("surface_") + tag + ".svg", detail::render([&](std::ostream& os) {
                      write_heatmap_svg(os, surf, lattice, h, ctx.stem + " f at iteration " + std::to_string(s.iteration));
                    }));
    }
    if (log) {
      const MetricsRow& r = s.history.back();
      *log << "[" << ctx.stem << "] iter " << r.iteration << " W1=" << detail::fmt_short(r.w1)
           << " k=" << detail::fmt_short(r.k_emp) << " J_D=" << detail::fmt_short(r.j_d) << "\n";
    }
  };

  try {
    state = run(std::move(state), m.training, rng, observer);
  } catch (const NumericalError& e) {
    throw NumericalError("run " + ctx.stem + ": " + e.what());
  }
  res.files.add("metrics.csv", detail::render([&](std::ostream& os) { write_metrics_csv(os, state.history, h); }));
  res.files.add("trajectory.csv", traj.str());
  res.files.add("particles_final.csv", detail::render([&](std::ostream& os) { write_cloud_csv(os, state.particles, h); }));
  res.files.add("net.ckpt", detail::render([&](std::ostream& os) { save_checkpoint(state.net, os, h.text()); }));
  res.history = state.history;
  res.final_state = std::move(state);
  return res;
}

/// Runs each prepared manifest concurrently; outputs are written per run once
/// it finishes. Returns 0 when every run succeeds.
template <class Work>
int run_all(const std::vector<RunContext>& runs, const Options& opts, std::ostream& out, std::ostream& err, Work work) {
  struct Done {
    std::string log;
    std::optional<OutputSet> files;
    std::string summary;
    bool ok = true;
    std::string error;
  };
  std::vector<std::future<Done>> jobs;
  for (const auto& ctx : runs) {
    jobs.push_back(std::async(std::launch::async, [&ctx, &opts, &work]() {
      Done d;
      std::ostringstream log;
      try {
        auto [files, summary, ok] = work(ctx, opts.quiet ? nullptr : static_cast<std::ostream*>(&log));
        d.files = std::move(files);
        d.summary = std::move(summary);
        d.ok = ok;
      } catch (const std::exception& e) {
        d.ok = false;
        d.error = e.what();
      }
      d.log = log.str();
      return d;
    }));
  }
  int rc = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    Done d = jobs[i].get();
    out << d.log;
    if (d.files) {
      d.files->write_all(runs[i].out_root);
      if (!opts.quiet)
        out << "[" << runs[i].stem << "] wrote " << d.files->files().size() << " files to " << runs[i].out_root.string()
            << "\n";
    }
    out << d.summary;
    if (!d.error.empty()) err << "[" << runs[i].stem << "] error: " << d.error << "\n";
    if (!d.ok) rc = 1;
  }
  return rc;
}

struct WorkResult {
  OutputSet files;
  std::string summary;
  bool ok = true;
};

inline int cmd_flow(const std::vector<std::string>& configs, const Options& opts, std::ostream& out, std::ostream& err) {
  const auto runs = prepare_runs(configs, opts);
  return run_all(runs, opts, out, err, [](const RunContext& ctx, std::ostream* log) {
    FlowResult r = run_flow(ctx, log);
    std::string summary;
    if (!r.history.empty()) {
      const auto& first = r.history.front();
      const auto& last = r.history.back();
      summary = "[" + ctx.stem + "] W1 " + fmt_num(first.w1) + " -> " + fmt_num(last.w1) + "\n";
    }
    return WorkResult{std::move(r.files), summary, true};
  });
}

// ---- verify ----

/// Full check suite for one manifest. Analytic checks always run; checks on
/// point clouds run when the scenario has them.
inline std::vector<TheoremReport> verify_suite(const RunContext& ctx, std::ostream* log = nullptr) {
  const RunManifest& m = ctx.manifest;
  auto note = [&](const std::string& s) {
    if (log) *log << "[" << ctx.stem << "] " << s << "\n";
  };
  std::vector<TheoremReport> reports;
  reports.push_back(l1_counterexample());

  {
    // js over two disjoint unit boxes; probes inside P_g's box.
    const auto pg = AnalyticDensity::uniform_box(make_point({0.0}), make_point({1.0}));
    const auto pr = AnalyticDensity::uniform_box(make_point({3.0}), make_point({4.0}));
    std::vector<Point> probes;
    for (int i = 0; i <= 10; ++i) probes.push_back(make_point({0.05 + 0.09 * i}));
    reports.push_back(check_disjoint_invariance(ClosedFormSpec::js(), pg, pr, make_point({2.5}), probes));
  }
  {
    // Logistic objective at its closed-form optimum on overlapping Gaussians.
    const auto pg = AnalyticDensity::gaussian(make_point({-0.5}), 1.0);
    const auto pr = AnalyticDensity::gaussian(make_point({0.5}), 1.0);
    const ClosedFormSpec js = ClosedFormSpec::js();
    const ScalarField f = [&](const Point& x) { return fstar_value(js, pg, pr, x); };
    std::vector<Point> pts;
    for (int i = 0; i <= 80; ++i) pts.push_back(make_point({-4.0 + 0.1 * i}));
    reports.push_back(check_stationarity(builtin_objective("logistic"), f, pg, pr, pts));
  }

  const Scenario sc = build_scenario(m);
  if (!sc.is_discrete()) {
    note("scenario has no point clouds; cloud-based checks skipped");
    return reports;
  }
  const PointCloud& pg = *sc.fake_cloud;
  const PointCloud& pr = *sc.real_cloud;

  // Duality and the LP potential.
  const TransportPlan plan = w1_primal(pr, pg);
  const DualPotential dr = w1_dual(pr, pg, ConstraintMode::support_restricted);
  const DualPotential df = w1_dual(pr, pg, ConstraintMode::full_lipschitz);
  {
    TheoremReport r;
    r.id = "dual_primal_equality";
    r.tolerances = {{"tol", 1e-6}};
    const double g1 = std::abs(dr.objective - plan.cost), g2 = std::abs(df.objective - plan.cost);
    r.pass = g1 <= 1e-6 && g2 <= 1e-6;
    r.detail = "primal " + fmt_num(plan.cost) + " support_restricted " + fmt_num(dr.objective) + " full_lipschitz " +
               fmt_num(df.objective);
    if (!r.pass) r.witnesses.push_back("gaps " + fmt_num(g1) + ", " + fmt_num(g2));
    reports.push_back(r);
  }
  {
    const ScalarField f = support_field(pr, pg, df.pr_values, df.pg_values);
    BoundingResult b = check_bounding(f, pg, pr, 1.0, 1e-9);
    b.disjoint.id += "_lp_potential";
    b.chain.id += "_lp_potential";
    reports.push_back(b.disjoint);
    reports.push_back(b.chain);
  }

  // Trained discriminator with the particles held fixed.
  note("training discriminator for " + std::to_string(m.static_steps) + " steps");
  Rng rng(ctx.seed);
  FlowState trained = train_static(initial_state(m, sc, rng), m.training, m.static_steps, rng);
  Rng krng(ctx.seed ^ 0x6B6573ULL);
  const double k = estimate_k(trained.net, pg, pr, 4096, krng);
  const ScalarField fnet = net_field(trained.net);
  {
    BoundingResult b = check_bounding(fnet, pg, pr, k, 0.05);
    TheoremReport r;
    r.id = "trained_bounding";
    r.tolerances = {{"tol", 0.05}, {"min_fraction", 0.9}, {"k", k}};
    r.pass = b.fake_real_tight_fraction >= 0.9;
    r.detail = "fraction of fake points with a tight real partner " + fmt_num(b.fake_real_tight_fraction);
    reports.push_back(r);
    b.chain.id += "_trained";
    reports.push_back(b.chain);
  }
  const bool linear = m.objective_name == "linear";
  {
    TheoremReport r;
    r.id = "gradient_direction";
    r.tolerances = {{"min_cosine", 0.95}, {"min_fraction", 0.9}};
    std::size_t good = 0;
    const auto grads = grad_input_batch(trained.net, pg.points());
    for (std::size_t i = 0; i < pg.size(); ++i) {
      std::size_t target = 0;
      if (linear) {
        const auto t = coupling_targets(plan, i);
        double best = -1.0;
        for (const auto& c : t)
          if (c.mass > best) best = c.mass, target = c.pr_index;
      } else {
        target = tight_real_partner(fnet, pg.point(i), pr);
      }
      const double c = cosine(grads[i], pr.point(target) - pg.point(i));
      if (c >= 0.95) ++good;
      else if (r.witnesses.size() < 8) r.witnesses.push_back("fake " + std::to_string(i) + " cosine " + fmt_num(c));
    }
    const double frac = static_cast<double>(good) / static_cast<double>(pg.size());
    r.pass = frac >= 0.9;
    r.detail = std::to_string(good) + "/" + std::to_string(pg.size()) + " fake points aligned with their " +
               (linear ? "transport target" : "tight real partner");
    reports.push_back(r);
  }
  {
    TheoremReport r;
    r.id = "interpolation";
    r.tolerances = {{"k", k}, {"tol", 0.1}};
    const std::size_t n = pg.size();
    const std::size_t pairs = std::min<std::size_t>(5, n);
    std::size_t passed = 0;
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t i = pairs == 1 ? 0 : p * (n - 1) / (pairs - 1);
      const auto t = coupling_targets(plan, i);
      std::size_t target = t.front().pr_index;
      double best = -1.0;
      for (const auto& c : t)
        if (c.mass > best) best = c.mass, target = c.pr_index;
      if (pg.point(i) == pr.point(target)) continue;
      const TheoremReport one = check_interpolation_gradient(trained.net, pg.point(i), pr.point(target), k, 10, 0.1);
      if (one.pass) ++passed;
      else r.witnesses.push_back("pair fake " + std::to_string(i) + " -> real " + std::to_string(target) + ": " + one.detail);
    }
    r.pass = pairs > 0 && r.witnesses.empty();
    r.detail = std::to_string(passed) + "/" + std::to_string(pairs) + " coupled pairs within tolerance, k=" + fmt_num(k);
    reports.push_back(r);
  }

  // Flow to equilibrium.
  note("running flow for " + std::to_string(m.training.outer_iterations) + " iterations");
  {
    Rng frng(ctx.seed);
    FlowState start = initial_state(m, sc, frng);
    const double w0 = w1(pr, pg);
    FlowState fin = run(std::move(start), m.training, frng);
    TheoremReport r = check_nash_convergence(fin, 0.1 * w0, 0.1);
    r.detail += " (initial W1=" + fmt_num(w0) + ")";
    reports.push_back(r);
  }
  {
    // P_g = P_r from the start: the optimum is flat.
    Rng erng(ctx.seed);
    MlpDiscriminator net = build_net(m, static_cast<int>(sc.dim), erng);
    FlowState eq(pr, pr, std::move(net), m.training.penalty.smax_capacity);
    eq = train_static(std::move(eq), m.training, m.static_steps, erng);
    TheoremReport r = check_nash_convergence(eq, 1e-12, 0.1);
    r.id = "nash_equal_start";
    reports.push_back(r);
    Rng k2(ctx.seed ^ 0x6571ULL);
    const double keq = estimate_k(eq.net, pr, pr, 1024, k2);
    TheoremReport o = check_overlap_bounding(net_field(eq.net), pr, pr, keq, 0.1);
    o.id += "_identical";
    reports.push_back(o);
  }
  {
    // Shared support, unequal weights: the LP potential has tight pairs.
    std::vector<double> w;
    for (std::size_t i = 0; i < pr.size(); ++i) w.push_back(1.0 + static_cast<double>(i));
    const PointCloud skew = PointCloud::normalized(pr.points(), w);
    TheoremReport o;
    if (skew.is_uniform()) {
      o.id = "overlap_bounding";
      o.pass = true;
      o.detail = "single-point support; nothing to compare";
    } else {
      const DualPotential d = w1_dual(pr, skew, ConstraintMode::full_lipschitz);
      o = check_overlap_bounding(support_field(pr, skew, d.pr_values, d.pg_values), skew, pr, 1.0, 1e-9);
    }
    reports.push_back(o);
  }
  {
    const MlpDiscriminator constant = MlpDiscriminator::affine(Point::Zero(sc.dim), 0.5);
    const BoundingResult b = check_bounding(net_field(constant), pg, pr, 1.0, 0.05);
    TheoremReport r;
    r.id = "negative_control_constant_net";
    r.pass = !b.disjoint.pass;
    r.detail = std::string(r.pass ? "expected-fail: " : "UNEXPECTED PASS: ") + "bounding on a constant net: " + b.disjoint.detail;
    reports.push_back(r);
  }
  return reports;
}

inline std::string report_summary(const std::string& stem, const std::vector<TheoremReport>& reports) {
  std::ostringstream os;
  std::size_t passed = 0;
  for (const auto& r : reports) {
    os << "[" << stem << "] " << (r.pass ? "PASS " : "FAIL ") << r.id << ": " << r.detail << "\n";
    if (r.pass) ++passed;
  }
  os << "[" << stem << "] " << passed << "/" << reports.size() << " checks passed\n";
  return os.str();
}

inline int cmd_verify(const std::vector<std::string>& configs, const Options& opts, std::ostream& out,
                      std::ostream& err) {
  const auto runs = prepare_runs(configs, opts);
  return run_all(runs, opts, out, err, [](const RunContext& ctx, std::ostream* log) {
    const auto reports = verify_suite(ctx, log);
    OutputSet files;
    files.add("report.csv", "# " + ctx.header.text() + "\n" + serialize(reports));
    bool ok = true;
    for (const auto& r : reports) ok = ok && r.pass;
    return WorkResult{std::move(files), report_summary(ctx.stem, reports), ok};
  });
}

// ---- surface ----

inline std::string surface_name(const std::string& act, double lr, std::size_t depth) {
  return "surface_" + act + "_lr" + detail::fmt_short(lr) + "_depth" + std::to_string(depth);
}

/// One value surface per (activation, lr, depth) cell. Depth counts hidden
/// layers of the manifest's first hidden width; depth 0 is an affine net.
inline OutputSet surface_grid(const RunContext& ctx, std::ostream* log = nullptr) {
  const RunManifest& m = ctx.manifest;
  const Scenario sc = build_scenario(m);
  if (sc.dim != 2 || !sc.is_discrete())
    throw InvalidArgument("surface requires a 2-D point-cloud scenario; preset " + std::string(to_string(sc.preset)) +
                          " has dimension " + std::to_string(sc.dim));
  const PointCloud& pg = *sc.fake_cloud;
  const PointCloud& pr = *sc.real_cloud;
  const Lattice lattice = detail::fit_lattice(detail::all_points(pr, pg), m.output.lattice_n);
  const int width = m.net.hidden.empty() ? 64 : m.net.hidden.front();
  OutputSet files;
  for (const auto& act_name : m.surface.activations) {
    const Activation act = Activation::parse(act_name, m.net.activation.slope);
    for (double lr : m.surface.lrs) {
      for (std::size_t depth : m.surface.depths) {
        std::vector<int> widths{2};
        widths.insert(widths.end(), depth, width);
        widths.push_back(1);
        Rng rng(ctx.seed);
        FlowState st(pg, pr, MlpDiscriminator::init(widths, act, m.net.init, rng), m.training.penalty.smax_capacity);
        TrainConfig cfg = m.training;
        cfg.adam.lr = lr;
        st = train_static(std::move(st), cfg, m.static_steps, rng);
        const Eigen::MatrixXd surf = value_surface(st.net, lattice);
        const std::string name = surface_name(act_name, lr, depth);
        files.add(name + ".csv",
                  detail::render([&](std::ostream& os) { write_matrix_csv(os, surf, ctx.header, detail::lattice_note(lattice)); }));
        files.add(name + ".svg",
                  detail::render([&](std::ostream& os) { write_heatmap_svg(os, surf, lattice, ctx.header, name); }));
        if (log) *log << "[" << ctx.stem << "] " << name << " range " << detail::fmt_short(surf.maxCoeff() - surf.minCoeff()) << "\n";
      }
    }
  }
  return files;
}

inline int cmd_surface(const std::vector<std::string>& configs, const Options& opts, std::ostream& out,
                       std::ostream& err) {
  const auto runs = prepare_runs(configs, opts);
  return run_all(runs, opts, out, err, [](const RunContext& ctx, std::ostream* log) {
    OutputSet files = surface_grid(ctx, log);
    const std::string summary = "[" + ctx.stem + "] " + std::to_string(files.files().size() / 2) + " surfaces\n";
    return WorkResult{std::move(files), summary, true};
  });
}

}  // namespace lipgan::app
