#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fd_oracle.hpp"
#include "lipgan/lipschitz.hpp"

using namespace lipgan;
using lipgan::testing::fd_params;
using lipgan::testing::kink_margin;
using lipgan::testing::rel_err;

namespace {

std::vector<Point> uniform_points(Rng& rng, std::size_t n, Eigen::Index dim, double lo, double hi) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    Point p(dim);
    for (Eigen::Index d = 0; d < dim; ++d) p[d] = rng.uniform(lo, hi);
    out.push_back(std::move(p));
  }
  return out;
}

// f(x) = 3 relu(x) - relu(-x): slope 1 left of 0, slope 3 right of it.
MlpDiscriminator two_slope_net() {
  Parameters p;
  DenseLayer l0{Eigen::MatrixXd(2, 1), Eigen::VectorXd::Zero(2)};
  l0.weight << 1.0, -1.0;
  DenseLayer l1{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1)};
  l1.weight << 3.0, -1.0;
  p.layers = {l0, l1};
  return MlpDiscriminator({1, 2, 1}, Activation{}, std::move(p));
}

MlpDiscriminator smooth_net(Rng& rng, int dim, ActivationKind kind) {
  auto net = MlpDiscriminator::init({dim, 6, 5, 1}, Activation{kind}, InitScheme::he, rng);
  for (auto& layer : net.mutable_params().layers)
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-0.5, 0.5);
  return net;
}

// Largest |slope| of a one-hidden-layer 1-D relu net on [lo, hi], by
// enumerating the regions between its kinks.
double max_slope_1d(const MlpDiscriminator& net, double lo, double hi) {
  const auto& l0 = net.params().layers[0];
  const auto& l1 = net.params().layers[1];
  std::vector<double> cuts{lo, hi};
  for (Eigen::Index i = 0; i < l0.bias.size(); ++i) {
    const double x = -l0.bias[i] / l0.weight(i, 0);
    if (x > lo && x < hi) cuts.push_back(x);
  }
  std::sort(cuts.begin(), cuts.end());
  double best = 0.0;
  for (std::size_t r = 0; r + 1 < cuts.size(); ++r) {
    const double mid = 0.5 * (cuts[r] + cuts[r + 1]);
    double slope = 0.0;
    for (Eigen::Index i = 0; i < l0.bias.size(); ++i)
      if (l0.weight(i, 0) * mid + l0.bias[i] > 0) slope += l1.weight(0, i) * l0.weight(i, 0);
    best = std::max(best, std::abs(slope));
  }
  return best;
}

const PointCloud kFake({make_point({1.0, 0.5}), make_point({1.0, -0.5})});
const PointCloud kReal({make_point({-1.0, 0.0}), make_point({-1.0, 1.0}), make_point({-0.5, 0.2})});

}  // namespace

TEST(PenaltyConfig, Validation) {
  PenaltyConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lambda = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = PenaltyConfig{};
  c.smax_capacity = 2 * c.blend_batch + 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW(parse_penalty_kind("wgan"), InvalidArgument);
  Rng rng(1);
  EXPECT_THROW(ksq_penalty(MlpDiscriminator::affine(make_point({1.0, 0.0}), 0), kFake, kReal, 4, 0.0, rng),
               InvalidArgument);
}

TEST(Penalties, AffineClosedForms) {
  Rng rng(2);
  const auto pts = uniform_points(rng, 9, 2, -3, 3);
  const auto half = MlpDiscriminator::affine(make_point({0.3, 0.4}), 1.0);
  const auto two = MlpDiscriminator::affine(make_point({1.2, -1.6}), -2.0);
  EXPECT_NEAR(grad_penalty(two, pts).loss, 4.0, 1e-12);
  EXPECT_NEAR(grad_penalty(half, pts).loss, 0.25, 1e-12);
  EXPECT_EQ(lp_penalty(half, pts).loss, 0.0);
  EXPECT_NEAR(lp_penalty(two, pts).loss, 1.0, 1e-12);
  const auto mg = maxgp_penalty(two, pts, SmaxList(4));
  EXPECT_NEAR(mg.loss, 4.0, 1e-12);
  EXPECT_LE(mg.smax.size(), 4u);
  EXPECT_NEAR(ksq_penalty(two, kFake, kReal, 16, 0.5, rng).loss, 0.5 * 4.0, 1e-12);
  EXPECT_NEAR(estimate_k(two, kFake, kReal, 7, rng), 2.0, 1e-15);
}

TEST(Penalties, ZeroNetIsZero) {
  Rng rng(3);
  auto net = smooth_net(rng, 2, ActivationKind::tanh);
  net.scale_output(0.0);
  const auto pts = uniform_points(rng, 5, 2, -1, 1);
  EXPECT_EQ(grad_penalty(net, pts).loss, 0.0);
  EXPECT_EQ(lp_penalty(net, pts).loss, 0.0);
  EXPECT_EQ(maxgp_penalty(net, pts, SmaxList(2)).loss, 0.0);
  EXPECT_EQ(estimate_k(net, kFake, kReal, 32, rng), 0.0);
  EXPECT_THROW(grad_penalty(net, {}), InvalidArgument);
  EXPECT_THROW(lp_penalty(net, {}), InvalidArgument);
  EXPECT_THROW(maxgp_penalty(net, {}, SmaxList(2)), InvalidArgument);
  EXPECT_THROW(estimate_k(net, kFake, kReal, 0, rng), InvalidArgument);
}

TEST(Penalties, DoubleGradientMatchesFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto kind = trial % 2 ? ActivationKind::swish : ActivationKind::tanh;
    const auto net = smooth_net(rng, 2, kind);
    const auto pts = uniform_points(rng, 6, 2, -1.5, 1.5);
    const double h = 1e-5;

    auto gp = grad_penalty(net, pts);
    EXPECT_LE(rel_err(gp.grads.flatten(), fd_params(net, [&](const MlpDiscriminator& n) { return grad_penalty(n, pts).loss; }, h)), 1e-4);
    auto gpc = grad_penalty(net, pts, 0.7);
    EXPECT_LE(rel_err(gpc.grads.flatten(), fd_params(net, [&](const MlpDiscriminator& n) { return grad_penalty(n, pts, 0.7).loss; }, h)), 1e-4);

    // Scale so some norms exceed 1 and the one-sided penalty is active.
    auto big = net;
    big.scale_output(3.0);
    auto lp = lp_penalty(big, pts);
    EXPECT_LE(rel_err(lp.grads.flatten(), fd_params(big, [&](const MlpDiscriminator& n) { return lp_penalty(n, pts).loss; }, h)), 1e-4);

    const SmaxList empty(3);
    auto mg = maxgp_penalty(net, pts, empty);
    EXPECT_LE(rel_err(mg.grads.flatten(), fd_params(net, [&](const MlpDiscriminator& n) { return maxgp_penalty(n, pts, empty).loss; }, h)), 1e-4);

    auto ksq = [&](const MlpDiscriminator& n) {
      Rng r(99);
      return ksq_penalty(n, kFake, kReal, 32, 2.0, r);
    };
    EXPECT_LE(rel_err(ksq(net).grads.flatten(), fd_params(net, [&](const MlpDiscriminator& n) { return ksq(n).loss; }, h)), 1e-4);
  }
}

TEST(Penalties, ReluDoubleGradientAwayFromKinks) {
  Rng rng(5);
  int checked = 0;
  while (checked < 10) {
    auto net = MlpDiscriminator::init({2, 8, 8, 1}, Activation{}, InitScheme::he, rng);
    for (auto& layer : net.mutable_params().layers)
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-0.5, 0.5);
    const auto pts = uniform_points(rng, 4, 2, -1, 1);
    if (kink_margin(net, pts) < 1e-3) continue;
    const auto gp = grad_penalty(net, pts);
    EXPECT_LE(rel_err(gp.grads.flatten(), fd_params(net, [&](const MlpDiscriminator& n) { return grad_penalty(n, pts).loss; }, 1e-6)), 1e-4);
    ++checked;
  }
}

TEST(MaxGp, SinglePointReducesToGradPenalty) {
  Rng rng(6);
  const auto net = smooth_net(rng, 2, ActivationKind::tanh);
  const std::vector<Point> one{make_point({0.3, -0.2})};
  const auto mg = maxgp_penalty(net, one, SmaxList(4));
  const auto gp = grad_penalty(net, one);
  EXPECT_DOUBLE_EQ(mg.loss, gp.loss);
  EXPECT_EQ(mg.grads.flatten(), gp.grads.flatten());
  ASSERT_EQ(mg.smax.size(), 1u);
  EXPECT_EQ(mg.smax.entries()[0].x, one[0]);
}

TEST(MaxGp, SelectionConcentratesOnSteepRegion) {
  const auto net = two_slope_net();
  Rng rng(7);
  SmaxList smax(4);
  for (int step = 0; step < 5; ++step) {
    const auto fresh = uniform_points(rng, 16, 1, -1, 1);
    const auto r = maxgp_penalty(net, fresh, smax);
    EXPECT_DOUBLE_EQ(r.loss, 9.0);
    for (const auto& e : r.smax.entries()) EXPECT_GT(e.x[0], 0.0);
    EXPECT_TRUE(r.smax.invariants_hold());
    smax = r.smax;
  }
}

TEST(MaxGp, CachedNormsAreRefreshedBeforeSelection) {
  const auto net = two_slope_net();
  SmaxList stale(2);
  // Entries in the slope-1 region carrying stale, inflated norms.
  stale.assign({{make_point({-0.5}), 100.0}, {make_point({-0.25}), 50.0}});
  const auto r = maxgp_penalty(net, {make_point({0.5}), make_point({0.75})}, stale);
  EXPECT_DOUBLE_EQ(r.loss, 9.0);
  for (const auto& e : r.smax.entries()) {
    EXPECT_GT(e.x[0], 0.0);
    EXPECT_DOUBLE_EQ(e.norm, 3.0);
  }
}

TEST(MaxGp, NeverBelowMeanPenaltyAndListInvariantsHold) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = smooth_net(rng, 2, trial % 2 ? ActivationKind::swish : ActivationKind::tanh);
    SmaxList smax(1 + rng.index(6));
    for (int step = 0; step < 3; ++step) {
      const auto fresh = uniform_points(rng, 1 + rng.index(8), 2, -2, 2);
      std::vector<Point> batch;
      for (const auto& e : smax.entries()) batch.push_back(e.x);
      batch.insert(batch.end(), fresh.begin(), fresh.end());
      const auto r = maxgp_penalty(net, fresh, smax);
      EXPECT_GE(r.loss, grad_penalty(net, batch).loss - 1e-12);
      EXPECT_TRUE(r.smax.invariants_hold());
      EXPECT_LE(r.smax.size(), smax.capacity());
      smax = r.smax;
    }
  }
}

TEST(EstimateK, ReluMaxSlopeByRegionEnumeration) {
  Rng rng(9);
  const PointCloud pg({make_point({2.0})});
  const PointCloud pr({make_point({-2.0})});
  for (int trial = 0; trial < 10; ++trial) {
    auto net = MlpDiscriminator::init({1, 12, 1}, Activation{}, InitScheme::he, rng);
    for (Eigen::Index i = 0; i < 12; ++i) net.mutable_params().layers[0].bias[i] = rng.uniform(-2, 2);
    const double s = max_slope_1d(net, -2.0, 2.0);
    Rng probe(100 + static_cast<std::uint64_t>(trial));
    const double k = estimate_k(net, pg, pr, 10000, probe);
    EXPECT_LE(k, s * (1 + 1e-12));
    EXPECT_NEAR(k, s, 0.01 * s) << trial;
  }
}

TEST(EstimateK, MonotoneInProbeCountForFixedSeed) {
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto net = smooth_net(rng, 2, ActivationKind::tanh);
    double prev = 0.0;
    for (std::size_t probes : {1, 4, 16, 64, 256, 1024}) {
      Rng r(777);
      const double k = estimate_k(net, kFake, kReal, probes, r);
      EXPECT_GE(k, prev);
      prev = k;
    }
  }
}

TEST(Ksq, GradientFlowsThroughArgmaxProbe) {
  Rng rng(11);
  const auto net = smooth_net(rng, 2, ActivationKind::tanh);
  Rng a(5), b(5);
  const auto est = estimate_k_detailed(net, kFake, kReal, 64, a);
  const auto r = ksq_penalty(net, kFake, kReal, 64, 1.5, b);
  const auto gp = grad_penalty(net, {est.argmax});
  EXPECT_NEAR(r.loss, 1.5 * est.k * est.k, 1e-12);
  EXPECT_LE(rel_err((1.5 * gp.grads).flatten(), r.grads.flatten()), 1e-12);
}
