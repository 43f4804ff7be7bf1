// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "lipgan/app.hpp"
#include "lipgan/closed_form.hpp"
#include "lipgan/dynamics.hpp"
#include "lipgan/scenario.hpp"
#include "lipgan/transport.hpp"
#include "lipgan/verify.hpp"

using namespace lipgan;
using lipgan::testing::fd_input;
using lipgan::testing::fd_params;
using lipgan::testing::kink_margin;
using lipgan::testing::rel_err;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const std::vector<std::string> kMembers{"linear", "logistic", "cosh_like", "exponential"};

PointCloud uniform_cloud(Rng& rng, std::size_t n) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(make_point({rng.uniform(), rng.uniform()}));
  return PointCloud(pts);
}

// Minimum average cost over all matchings.
double brute_force_w1(const PointCloud& pr, const PointCloud& pg) {
  std::vector<std::size_t> perm(pr.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += euclidean(pr.point(i), pg.point(perm[i]));
    best = std::min(best, c / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

MlpDiscriminator make_net(const std::vector<int>& widths, const char* act, Rng& rng) {
  return MlpDiscriminator::init(widths, Activation::parse(act), InitScheme::he, rng);
}

TrainConfig maxgp_config(const std::string& objective, double lambda) {
  TrainConfig cfg;
  cfg.objective = builtin_objective(objective);
  cfg.penalty.kind = PenaltyKind::maxgp;
  cfg.penalty.lambda = lambda;
  cfg.penalty.blend_batch = 64;
  cfg.penalty.smax_capacity = 32;
  return cfg;
}

Outcome duality() {
  Rng rng(2024);
  std::vector<std::pair<PointCloud, PointCloud>> cases;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 1 + rng.index(8);
    cases.emplace_back(uniform_cloud(rng, n), uniform_cloud(rng, n));
  }
  double worst_gap = 0.0, worst_mode = 0.0, worst_oracle = 0.0;
  const auto t0 = Clock::now();
  std::vector<double> primal;
  for (const auto& [pr, pg] : cases) {
    const double p = w1(pr, pg);
    const double sr = w1_dual(pr, pg, ConstraintMode::support_restricted).objective;
    const double full = w1_dual(pr, pg, ConstraintMode::full_lipschitz).objective;
    worst_gap = std::max({worst_gap, std::abs(sr - p), std::abs(full - p)});
    worst_mode = std::max(worst_mode, std::abs(sr - full));
    primal.push_back(p);
  }
  const double secs = seconds_since(t0);
  for (std::size_t i = 0; i < cases.size(); ++i)
    worst_oracle = std::max(worst_oracle, std::abs(primal[i] - brute_force_w1(cases[i].first, cases[i].second)));
  return {worst_gap <= 1e-6 && worst_mode <= 1e-6 && worst_oracle <= 1e-9 && secs < 10.0,
          "50 clouds: max |dual-primal| " + fmt("%.2e", worst_gap) + ", max |restricted-full| " + fmt("%.2e", worst_mode) +
              ", max |primal-brute force| " + fmt("%.2e", worst_oracle) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome parallel_lines_exact() {
  const auto sc = parallel_lines(10);
  const PointCloud& pr = *sc.real_cloud;
  const PointCloud& pg = *sc.fake_cloud;
  const double w = w1(pr, pg);
  const std::vector<double> on_pr(pr.size(), 1.0), on_pg(pg.size(), 0.0);
  const double violation = dual_max_violation(pr, pg, on_pr, on_pg, ConstraintMode::support_restricted);
  const double objective = dual_objective(pr, pg, on_pr, on_pg);
  const double lp = w1_dual(pr, pg, ConstraintMode::support_restricted).objective;

  const auto box_g = AnalyticDensity::uniform_box(make_point({0.0, 0.0}), make_point({1.0, 1.0}));
  const auto box_r = AnalyticDensity::uniform_box(make_point({3.0, 0.0}), make_point({4.0, 1.0}));
  std::vector<Point> probes;
  Rng rng(8);
  for (int i = 0; i < 200; ++i) probes.push_back(make_point({rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99)}));
  const auto inv = check_disjoint_invariance(ClosedFormSpec::js(), box_g, box_r, make_point({2.5, -1.0}), probes);

  const bool ok = std::abs(w - 1.0) <= 1e-9 && violation <= 0.0 && std::abs(objective - w) <= 1e-9 &&
                  std::abs(lp - objective) <= 1e-9 && inv.pass;
  return {ok, "W1 " + fmt("%.12f", w) + ", step potential violation " + fmt("%.3g", violation) + " objective " +
                  fmt("%.12f", objective) + " (LP optimum " + fmt("%.12f", lp) + "); " + inv.detail};
}

Outcome gradient_direction() {
  const auto sc = random_clouds(20, 20, 2, 1.0, 2.0, 42);
  bool ok = true;
  std::string detail;
  for (const auto& name : kMembers) {
    Rng rng(1);
    auto cfg = maxgp_config(name, 10.0);
    cfg.d_steps = 10000;
    FlowState st(*sc.fake_cloud, *sc.real_cloud, make_net({2, 64, 64, 1}, "relu", rng), cfg.penalty.smax_capacity);
    const auto t0 = Clock::now();
    st = train_discriminator(std::move(st), cfg, rng);
    const double secs = seconds_since(t0);
    const auto plan = w1_primal(st.target, st.particles);
    const auto f = net_field(st.net);
    std::size_t good = 0;
    for (std::size_t i = 0; i < st.particles.size(); ++i) {
      const Point& x = st.particles.point(i);
      const std::size_t j =
          name == "linear" ? coupling_targets(plan, i).front().pr_index : tight_real_partner(f, x, st.target);
      if (cosine(grad_input(st.net, x), st.target.point(j) - x) >= 0.95) ++good;
    }
    const bool pass = good * 10 >= 9 * st.particles.size() && secs < 120.0;
    ok = ok && pass;
    detail += (detail.empty() ? "" : "; ") + name + " " + std::to_string(good) + "/20 in " + fmt("%.1f", secs) + " s";
  }
  return {ok, detail};
}

double flow_reduction(const std::string& objective, const Scenario& sc) {
  Rng rng(1);
  auto cfg = maxgp_config(objective, 1.0);
  cfg.d_steps = 50;
  cfg.eta = 0.05;
  cfg.outer_iterations = 500;
  FlowState st(*sc.fake_cloud, *sc.real_cloud, make_net({2, 64, 64, 1}, "relu", rng), cfg.penalty.smax_capacity);
  st = run(std::move(st), cfg, rng);
  return 1.0 - st.history.back().w1 / st.history.front().w1;
}

Outcome convergence() {
  const std::vector<std::pair<std::string, Scenario>> scenarios{{"parallel_lines", parallel_lines(10)},
                                                                {"random_clouds", random_clouds(20, 20, 2, 1.0, 2.0, 42)}};
  bool ok = true;
  std::string detail;
  for (const auto& [sname, sc] : scenarios) {
    for (const auto& name : kMembers) {
      const double red = flow_reduction(name, sc);
      ok = ok && red >= 0.9;
      detail += (detail.empty() ? "" : "; ") + name + "/" + sname + " " + fmt("%.1f%%", 100 * red);
    }
    detail += "; hinge/" + sname + " " + fmt("%.1f%% (not asserted)", 100 * flow_reduction("hinge", sc));
  }
  return {ok, detail};
}

// argmin over a fine grid of -k d + lambda k^2.
double grid_optimal_k(double d, double lambda) {
  double best_k = 0.0, best = INFINITY;
  for (int i = 0; i <= 1000000; ++i) {
    const double k = 5.0 * i / 1e6;
    const double v = -k * d + lambda * k * k;
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  return best_k;
}

Outcome optimal_k() {
  bool ok = true;
  std::string detail;
  const auto t0 = Clock::now();
  for (const auto& [d, lambda] : std::vector<std::pair<double, double>>{{1, 0.5}, {2, 1}, {4, 2}}) {
    const auto sc = two_delta(d);
    Rng rng(1);
    TrainConfig cfg;
    cfg.objective = builtin_objective("linear");
    cfg.penalty.kind = PenaltyKind::ksq;
    cfg.penalty.lambda = lambda;
    cfg.penalty.blend_batch = 64;
    cfg.d_steps = 5000;
    FlowState st(*sc.fake_cloud, *sc.real_cloud, make_net({1, 32, 32, 1}, "relu", rng), 32);
    st = train_discriminator(std::move(st), cfg, rng);
    Rng probe(5);
    const double k = estimate_k(st.net, st.particles, st.target, 10000, probe);
    const double target = grid_optimal_k(d, lambda);
    const double law = optimal_k_two_delta(cfg.objective, d, lambda);
    const double rel = std::abs(k / target - 1.0);
    ok = ok && rel <= 0.05 && std::abs(law - target) <= 1e-5;
    detail += (detail.empty() ? "" : "; ") + fmt("d=%g", d) + fmt(" lambda=%g", lambda) + fmt(": k=%.4f", k) +
              fmt(" vs %.4f", target) + fmt(" (%.2f%%)", 100 * rel);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, detail + "; " + fmt("%.1f", secs) + " s"};
}

double drift_std(const std::string& objective) {
  const auto sc = parallel_lines(10);
  Rng rng(1);
  auto cfg = maxgp_config(objective, 10.0);
  cfg.d_steps = 50;
  cfg.eta = 0.05;
  cfg.outer_iterations = 500;
  FlowState st(*sc.fake_cloud, *sc.real_cloud, make_net({2, 64, 64, 1}, "tanh", rng), cfg.penalty.smax_capacity);
  st = run(std::move(st), cfg, rng);
  const auto& h = st.history;
  std::vector<double> drift;
  for (std::size_t i = h.size() - 200; i < h.size(); ++i) drift.push_back(0.5 * (h[i].mean_f_pg + h[i].mean_f_pr));
  const double mean = std::accumulate(drift.begin(), drift.end(), 0.0) / static_cast<double>(drift.size());
  double ss = 0.0;
  for (double v : drift) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(drift.size() - 1));
}

Outcome offset_stability() {
  const double lin = drift_std("linear");
  const double logi = drift_std("logistic");
  const double ratio = lin / logi;
  return {ratio >= 10.0, "drift std linear " + fmt("%.3e", lin) + ", logistic " + fmt("%.3e", logi) + ", ratio " +
                             fmt("%.1f", ratio)};
}

Outcome interpolation() {
  const auto sc = parallel_lines(10);
  Rng rng(1);
  auto cfg = maxgp_config("linear", 10.0);
  cfg.d_steps = 10000;
  FlowState st(*sc.fake_cloud, *sc.real_cloud, make_net({2, 64, 64, 1}, "relu", rng), cfg.penalty.smax_capacity);
  st = train_discriminator(std::move(st), cfg, rng);
  Rng probe(5);
  const double k = estimate_k(st.net, st.particles, st.target, 1000, probe);
  const auto plan = w1_primal(st.target, st.particles);
  std::size_t pass = 0;
  std::string worst;
  for (std::size_t i = 0; i < 10; i += 2) {
    const auto y = st.target.point(coupling_targets(plan, i).front().pr_index);
    const auto rep = check_interpolation_gradient(st.net, st.particles.point(i), y, k, 10, 0.1);
    if (rep.pass) ++pass;
    else worst = rep.detail;
  }
  return {pass == 5, "k " + fmt("%.4f", k) + ", " + std::to_string(pass) + "/5 pairs within 10% norm and cosine >= 0.9" +
                         (worst.empty() ? "" : "; failing pair " + worst)};
}

Outcome l1_exact() {
  const auto rep = l1_counterexample();
  const auto g = MlpDiscriminator::affine(make_point({1.0, 1.0}), 0.0);
  const Point a = make_point({0.0, 0.0}), b = make_point({2.0, 1.0});
  const bool direct = forward(g, b) - forward(g, a) == 3.0 && l1_distance(a, b) == 3.0 &&
                      std::abs(cosine(grad_input(g, a), b - a) - 3.0 / std::sqrt(10.0)) <= 1e-12;
  return {rep.pass && direct, rep.detail};
}

Outcome autodiff() {
  Rng rng(31337);
  const std::vector<const char*> acts{"tanh", "swish", "relu", "leaky_relu"};
  double worst_input = 0.0, worst_penalty = 0.0;
  std::size_t checks = 0;
  while (checks < 100) {
    const int dim = 1 + static_cast<int>(rng.index(4));
    const int w1_ = 3 + static_cast<int>(rng.index(10)), w2_ = 3 + static_cast<int>(rng.index(10));
    const char* act = acts[checks % acts.size()];
    auto net = MlpDiscriminator::init({dim, w1_, w2_, 1}, Activation::parse(act), InitScheme::he, rng);
    for (auto& layer : net.mutable_params().layers)
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-0.5, 0.5);
    std::vector<Point> pts;
    for (int i = 0; i < 4; ++i) {
      Point p(dim);
      for (int d = 0; d < dim; ++d) p[d] = rng.uniform(-1.5, 1.5);
      pts.push_back(p);
    }
    // Piecewise-linear nets are only differentiable away from their kinks.
    const bool kinked = std::string(act) == "relu" || std::string(act) == "leaky_relu";
    if (kinked && kink_margin(net, pts) < 1e-3) continue;
    const double h = kinked ? 1e-6 : 1e-5;
    worst_input = std::max(worst_input, rel_err(grad_input(net, pts[0]), fd_input(net, pts[0], 1e-6)));

    std::vector<double> analytic, numeric;
    switch (checks % 4) {
      case 0:
        analytic = grad_penalty(net, pts, 0.5).grads.flatten();
        numeric = fd_params(net, [&](const MlpDiscriminator& n) { return grad_penalty(n, pts, 0.5).loss; }, h);
        break;
      case 1: {
        auto big = net;
        big.scale_output(3.0);
        analytic = lp_penalty(big, pts).grads.flatten();
        numeric = fd_params(big, [&](const MlpDiscriminator& n) { return lp_penalty(n, pts).loss; }, h);
        break;
      }
      case 2: {
        const SmaxList empty(2);
        analytic = maxgp_penalty(net, pts, empty).grads.flatten();
        numeric = fd_params(net, [&](const MlpDiscriminator& n) { return maxgp_penalty(n, pts, empty).loss; }, h);
        break;
      }
      default: {
        const PointCloud pg({pts[0], pts[1]}), pr({pts[2], pts[3]});
        auto ksq = [&](const MlpDiscriminator& n) {
          Rng r(99);
          return ksq_penalty(n, pg, pr, 16, 2.0, r);
        };
        analytic = ksq(net).grads.flatten();
        numeric = fd_params(net, [&](const MlpDiscriminator& n) { return ksq(n).loss; }, h);
      }
    }
    worst_penalty = std::max(worst_penalty, rel_err(analytic, numeric));
    ++checks;
  }
  return {worst_input <= 1e-5 && worst_penalty <= 1e-4,
          "100 random nets: max input rel err " + fmt("%.2e", worst_input) + ", max penalty double-gradient rel err " +
              fmt("%.2e", worst_penalty)};
}

Outcome image_artifact(const fs::path& out_dir) {
  app::Options opts;
  opts.quiet = true;
  opts.out_dir = out_dir;
  std::ostringstream out, err;
  const int rc = app::cmd_flow({LIPGAN_SOURCE_DIR "/configs/ten_images.ini"}, opts, out, err);
  const fs::path run = out_dir / "ten_images";
  const bool files = fs::exists(run / "image_gradients.csv") && fs::exists(run / "image_rows.svg");
  return {rc == 0 && files, "artifact written to " + run.string() + " (qualitative, no numeric threshold)" +
                                (err.str().empty() ? "" : "; " + err.str())};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path artifacts = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_artifacts");
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"dual-primal equivalence on random clouds", duality},
      {"parallel lines exact W1, step potential, disjoint invariance", parallel_lines_exact},
      {"gradient direction after static training", gradient_direction},
      {"particle flow W1 reduction >= 90% in 500 iterations", convergence},
      {"optimal k = d/(2 lambda) under the ksq penalty", optimal_k},
      {"offset drift: linear vs logistic std ratio >= 10", offset_stability},
      {"interpolation gradients along coupled pairs", interpolation},
      {"l1 counterexample", l1_exact},
      {"autodiff finite-difference soundness", autodiff},
      {"ten-image gradient artifact", [&] { return image_artifact(artifacts); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2zu %s: %s | %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
