#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "lipgan/scenario.hpp"
#include "lipgan/verify.hpp"

using namespace lipgan;

namespace {

PointCloud random_cloud(Rng& rng, std::size_t n, double shift) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(make_point({rng.uniform(0, 1) + shift, rng.uniform(0, 1)}));
  return PointCloud(std::move(pts));
}

// 1-D net f(x) = tanh(x).
MlpDiscriminator tanh_net() {
  Parameters p;
  p.layers.push_back({Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1)});
  p.layers.push_back({Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1)});
  return MlpDiscriminator({1, 1, 1}, Activation{ActivationKind::tanh}, std::move(p));
}

std::string random_text(Rng& rng) {
  static const std::string alphabet = "ab,;=\"\\\n xyz0.9-";
  std::string s;
  const std::size_t n = rng.index(12);
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng.index(alphabet.size())];
  return s;
}

}  // namespace

TEST(Bounding, ParallelLinesLinearPotentialIsTightEverywhere) {
  const auto sc = parallel_lines(10);
  const auto f = MlpDiscriminator::affine(make_point({-1.0, 0.0}), 1.0);
  const auto res = check_bounding(net_field(f), *sc.fake_cloud, *sc.real_cloud, 1.0, 0.05);
  EXPECT_TRUE(res.disjoint.pass) << res.disjoint.detail;
  EXPECT_TRUE(res.chain.pass) << res.chain.detail;
  EXPECT_EQ(res.fake_real_tight_fraction, 1.0);
  for (const auto& bp : res.pairs) {
    EXPECT_TRUE(bp.tight);
    EXPECT_NEAR(bp.slack, 0.0, 1e-15);
  }
  // The opposite real point (same height) is the bounding partner of each fake point.
  for (std::size_t j = 0; j < 10; ++j) {
    const auto y = tight_real_partner(net_field(f), sc.fake_cloud->point(j), *sc.real_cloud);
    EXPECT_NEAR((f.params().layers[0].weight * (sc.real_cloud->point(y) - sc.fake_cloud->point(j)))(0, 0), 1.0, 1e-15);
  }
}

TEST(Bounding, ConstantFunctionFailsWithWitnesses) {
  const auto sc = parallel_lines(10);
  const auto res = check_bounding([](const Point&) { return 0.25; }, *sc.fake_cloud, *sc.real_cloud, 1.0);
  EXPECT_FALSE(res.disjoint.pass);
  EXPECT_FALSE(res.chain.pass);
  EXPECT_FALSE(res.disjoint.witnesses.empty());
  EXPECT_FALSE(res.chain.witnesses.empty());
  EXPECT_EQ(res.fake_real_tight_fraction, 0.0);
  EXPECT_THROW(check_bounding([](const Point&) { return 0.0; }, *sc.fake_cloud, *sc.real_cloud, 0.0), InvalidArgument);
}

TEST(Bounding, SlackNonNegativeWhenKBoundsTheTrueConstant) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const Point w = make_point({rng.uniform(-2, 2), rng.uniform(-2, 2)});
    const auto f = MlpDiscriminator::affine(w, rng.uniform(-1, 1));
    const auto pg = random_cloud(rng, 6, 0.0);
    const auto pr = random_cloud(rng, 5, 0.5);
    for (double k : {w.norm(), 1.5 * w.norm()}) {
      const auto res = check_bounding(net_field(f), pg, pr, k);
      for (const auto& bp : res.pairs) EXPECT_GE(bp.slack, -1e-9);
    }
  }
}

TEST(Bounding, LpPotentialTightChainsRunFromFakeToReal) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pg = random_cloud(rng, 1 + rng.index(6), 0.0);
    const auto pr = random_cloud(rng, 1 + rng.index(6), 1.5);
    const auto pot = w1_dual(pr, pg, ConstraintMode::full_lipschitz);
    const auto f = support_field(pr, pg, pot.pr_values, pot.pg_values);
    const auto res = check_bounding(f, pg, pr, 1.0, 1e-9);
    EXPECT_TRUE(res.disjoint.pass) << res.disjoint.detail;
    EXPECT_TRUE(res.chain.pass) << res.chain.detail;

    // Oracle: in the tight graph, points with no tight lower neighbour start
    // maximal chains and must be fake; points with no higher one end them and
    // must be real.
    std::vector<std::pair<Point, bool>> pts;  // (x, is_real)
    std::vector<double> fv;
    for (std::size_t j = 0; j < pg.size(); ++j) { pts.emplace_back(pg.point(j), false); fv.push_back(pot.pg_values[j]); }
    for (std::size_t i = 0; i < pr.size(); ++i) { pts.emplace_back(pr.point(i), true); fv.push_back(pot.pr_values[i]); }
    for (std::size_t a = 0; a < pts.size(); ++a) {
      bool lower = false, higher = false;
      for (std::size_t b = 0; b < pts.size(); ++b) {
        if (a == b) continue;
        const double d = euclidean(pts[a].first, pts[b].first);
        if (std::abs(std::abs(fv[b] - fv[a]) - d) > 1e-9) continue;
        (fv[b] < fv[a] ? lower : higher) = true;
      }
      if (!lower && higher) {
        EXPECT_FALSE(pts[a].second) << "chain starts at a real point";
      }
      if (lower && !higher) {
        EXPECT_TRUE(pts[a].second) << "chain ends at a fake point";
      }
    }
  }
}

TEST(Interpolation, AffineNetIsExact) {
  const Point u = make_point({0.6, 0.8});
  const double k = 2.5;
  const auto net = MlpDiscriminator::affine(k * u, -1.0);
  const Point x = make_point({0.3, -0.2});
  const auto r = check_interpolation_gradient(net, x, x + 1.7 * u, k, 10, 1e-12);
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_TRUE(r.witnesses.empty());
  EXPECT_THROW(check_interpolation_gradient(net, x, x, k), InvalidArgument);
}

TEST(Interpolation, SaturatingTanhFailsAtTheEnds) {
  const auto r = check_interpolation_gradient(tanh_net(), make_point({-3.0}), make_point({3.0}), 1.0, 10, 0.1);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.witnesses.empty());
  // Around 0 the slope is 1, so only the outer points are witnesses.
  for (const auto& w : r.witnesses) EXPECT_EQ(w.find("t=0.5 "), std::string::npos);
}

TEST(L1Counterexample, ExactWitness) {
  const auto r = l1_counterexample();
  EXPECT_TRUE(r.pass) << r.detail;
  EXPECT_NE(r.detail.find("g(B)-g(A)=3 l1(A,B)=3"), std::string::npos) << r.detail;
  const auto g = MlpDiscriminator::affine(make_point({1.0, 1.0}), 0.0);
  EXPECT_NEAR(cosine(grad_input(g, make_point({0, 0})), make_point({2, 1})), 3.0 / std::sqrt(10.0), 1e-12);
}

TEST(Nash, ConvergedAndMidTrainingStates) {
  const auto sc = parallel_lines(10);
  auto flat = MlpDiscriminator::affine(make_point({0.0, 0.0}), 0.3);
  const FlowState done(*sc.real_cloud, *sc.real_cloud, flat, 4);
  EXPECT_TRUE(check_nash_convergence(done, 1e-9, 1e-9).pass);

  const FlowState mid(*sc.fake_cloud, *sc.real_cloud, MlpDiscriminator::affine(make_point({-1.0, 0.0}), 1.0), 4);
  const auto r = check_nash_convergence(mid, 0.05, 0.1);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.witnesses.size(), 2u);
}

TEST(Stationarity, LogisticOptimumIsLogDensityRatio) {
  const auto pg = AnalyticDensity::gaussian(make_point({-0.5}), 1.0);
  const auto pr = AnalyticDensity::gaussian(make_point({0.5}), 1.0);
  const auto obj = builtin_objective("logistic");
  std::vector<Point> xs;
  for (int i = 0; i <= 80; ++i) xs.push_back(make_point({-4.0 + 0.1 * i}));
  xs.push_back(make_point({60.0}));  // both densities underflow: excluded
  auto fstar = [&](const Point& x) { return std::log(density_value(pr, x) / density_value(pg, x)); };
  const auto ok = check_stationarity(obj, fstar, pg, pr, xs);
  EXPECT_TRUE(ok.pass) << ok.detail;
  EXPECT_NE(ok.detail.find("1 excluded"), std::string::npos) << ok.detail;
  const auto bad = check_stationarity(obj, [&](const Point& x) { return fstar(x) + 0.1; }, pg, pr, xs);
  EXPECT_FALSE(bad.pass);
}

TEST(Overlap, IdenticalAndSharedSupport) {
  const PointCloud same({make_point({0.0, 0.0}), make_point({1.0, 0.0}), make_point({0.0, 1.0})});
  EXPECT_TRUE(check_overlap_bounding([](const Point&) { return 0.0; }, same, same, 0.0).pass);
  EXPECT_FALSE(check_overlap_bounding([](const Point&) { return 0.0; }, same, same, 0.5).pass);

  const PointCloud skew(same.points(), {0.5, 0.3, 0.2});
  const auto pot = w1_dual(skew, same, ConstraintMode::full_lipschitz);
  ASSERT_GT(pot.objective, 0.0);
  const auto f = support_field(skew, same, pot.pr_values, pot.pg_values);
  EXPECT_TRUE(check_overlap_bounding(f, same, skew, 1.0, 1e-9).pass);
  EXPECT_FALSE(check_overlap_bounding(f, same, skew, 0.0).pass);
}

TEST(Reports, RoundTripLosslessly) {
  Rng rng(4);
  std::vector<TheoremReport> reports;
  for (int i = 0; i < 50; ++i) {
    TheoremReport r;
    r.id = "check_" + std::to_string(i);
    r.pass = rng.uniform() < 0.5;
    r.detail = random_text(rng);
    for (std::size_t t = 0; t < rng.index(4); ++t)
      r.tolerances.emplace_back("tol" + std::to_string(t), rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.uniform(-20, 20)));
    for (std::size_t w = 0; w < rng.index(4); ++w) r.witnesses.push_back(random_text(rng));
    reports.push_back(r);
  }
  const auto back = parse_reports("# seed=1\n" + serialize(reports));
  ASSERT_EQ(back.size(), reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) EXPECT_EQ(back[i], reports[i]) << serialize(reports[i]);
  EXPECT_THROW(parse_report_line("x,maybe,\"\",\"\""), ParseError);
  EXPECT_THROW(parse_report_line("x,true,\"open"), ParseError);
}
