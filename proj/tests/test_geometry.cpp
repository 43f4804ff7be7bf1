#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lipgan/geometry.hpp"

using namespace lipgan;

TEST(Euclidean, KnownValues) {
  EXPECT_EQ(euclidean(make_point({0, 0}), make_point({0, 0})), 0.0);
  EXPECT_DOUBLE_EQ(euclidean(make_point({0, 0}), make_point({3, 4})), 5.0);
  EXPECT_NEAR(euclidean(make_point({2, 1}), make_point({0, 0})), std::sqrt(5.0), 1e-15);
}

TEST(Euclidean, DimensionMismatchThrows) {
  EXPECT_THROW(euclidean(make_point({0, 0}), make_point({0, 0, 0})), DimensionMismatch);
  EXPECT_THROW(l1_distance(make_point({0}), make_point({0, 0})), DimensionMismatch);
}

TEST(Euclidean, TriangleInequalityAndSymmetryOnRandomTriples) {
  Rng rng(101);
  for (int trial = 0; trial < 2000; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(6));
    Point a(d), b(d), c(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      a[i] = rng.uniform(-5, 5);
      b[i] = rng.uniform(-5, 5);
      c[i] = rng.uniform(-5, 5);
    }
    EXPECT_LE(euclidean(a, c), euclidean(a, b) + euclidean(b, c) + 1e-12);
    EXPECT_EQ(euclidean(a, b), euclidean(b, a));
    EXPECT_GT(euclidean(a, b), 0.0);
  }
}

TEST(L1Distance, KnownValues) {
  EXPECT_EQ(l1_distance(make_point({0, 0}), make_point({2, 1})), 3.0);
  EXPECT_EQ(l1_distance(make_point({1, 1}), make_point({1, 1})), 0.0);
  EXPECT_EQ(l1_distance(make_point({0, 0}), make_point({3, 4})), 7.0);
}

TEST(Cosine, ZeroVectorGivesZero) {
  EXPECT_EQ(cosine(make_point({0, 0}), make_point({1, 0})), 0.0);
  EXPECT_NEAR(cosine(make_point({1, 1}), make_point({2, 2})), 1.0, 1e-15);
  EXPECT_NEAR(cosine(make_point({1, 0}), make_point({-1, 0})), -1.0, 1e-15);
}

TEST(PointCloud, UniformWeights) {
  PointCloud c({make_point({0}), make_point({1}), make_point({2}), make_point({3})});
  EXPECT_EQ(c.size(), 4u);
  EXPECT_EQ(c.dim(), 1);
  EXPECT_TRUE(c.is_uniform());
  for (double w : c.weights()) EXPECT_EQ(w, 0.25);
}

TEST(PointCloud, RejectsInvalidInput) {
  EXPECT_THROW(PointCloud(std::vector<Point>{}), InvalidArgument);
  EXPECT_THROW(PointCloud({make_point({0}), make_point({0, 1})}), DimensionMismatch);
  EXPECT_THROW(PointCloud({make_point({0}), make_point({1})}, {0.5, 0.6}), InvalidArgument);
  EXPECT_THROW(PointCloud({make_point({0}), make_point({1})}, {1.5, -0.5}), InvalidArgument);
  EXPECT_THROW(PointCloud({make_point({0})}, {0.5, 0.5}), InvalidArgument);
  EXPECT_THROW(PointCloud({make_point({NAN})}), InvalidArgument);
}

TEST(PointCloud, WeightSumToleranceIsOneEMinus12) {
  EXPECT_NO_THROW(PointCloud({make_point({0}), make_point({1})}, {0.5, 0.5 + 5e-13}));
  EXPECT_THROW(PointCloud({make_point({0}), make_point({1})}, {0.5, 0.5 + 5e-12}), InvalidArgument);
}

TEST(PointCloud, NormalizedScalesWeights) {
  const auto c = PointCloud::normalized({make_point({0}), make_point({1})}, {1.0, 3.0});
  EXPECT_DOUBLE_EQ(c.weight(0), 0.25);
  EXPECT_DOUBLE_EQ(c.weight(1), 0.75);
  EXPECT_FALSE(c.is_uniform());
  EXPECT_THROW(PointCloud::normalized({make_point({0})}, {0.0}), InvalidArgument);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs = differs || x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformStaysInRangeWithSensibleMoments) {
  Rng r(5);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
  sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, CategoricalFollowsWeightsAndSkipsZeros) {
  Rng r(9);
  const std::vector<double> w{0.0, 0.25, 0.0, 0.75};
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++counts[r.categorical(w)];
  EXPECT_EQ(counts[0], 0);
  EXPECT_EQ(counts[2], 0);
  EXPECT_NEAR(counts[1] / 40000.0, 0.25, 0.01);
}

TEST(Rng, ForkDoesNotAdvanceParent) {
  Rng a(7), b(7);
  Rng child = a.fork(3);
  (void)child.next_u64();
  EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c1 = a.fork(1), c2 = a.fork(2);
  EXPECT_NE(c1.next_u64(), c2.next_u64());
}

TEST(BlendSample, SegmentContainment) {
  PointCloud pg({make_point({0, 0})}), pr({make_point({1, 0})});
  Rng rng(3);
  for (const auto& p : blend_sample(pg, pr, 500, rng)) {
    EXPECT_GE(p[0], 0.0);
    EXPECT_LE(p[0], 1.0);
    EXPECT_EQ(p[1], 0.0);
  }
}

TEST(BlendSample, RejectsZeroCountAndMismatchedDims) {
  PointCloud a({make_point({0, 0})}), b({make_point({1})});
  Rng rng(1);
  EXPECT_THROW(blend_sample(a, a, 0, rng), InvalidArgument);
  EXPECT_THROW(blend_sample(a, b, 3, rng), DimensionMismatch);
}

TEST(BlendSample, DegenerateBlendReturnsThePoint) {
  const Point p = make_point({0.3, -1.7, 2.9});
  PointCloud c({p});
  Rng rng(11);
  for (const auto& q : blend_sample(c, c, 100, rng)) EXPECT_EQ(q, p);
}

TEST(BlendSample, OutputsLieInConvexHullOfSupports) {
  // Supports in the unit square's corners: the hull is the square itself.
  PointCloud pg({make_point({0, 0}), make_point({0, 1})});
  PointCloud pr({make_point({1, 0}), make_point({1, 1})}, {0.9, 0.1});
  Rng rng(21);
  for (const auto& q : blend_sample(pg, pr, 2000, rng)) {
    EXPECT_GE(q[0], 0.0);
    EXPECT_LE(q[0], 1.0);
    EXPECT_GE(q[1], 0.0);
    EXPECT_LE(q[1], 1.0);
  }
}

TEST(BlendSample, IdenticalSeedsReproduceBitExactly) {
  PointCloud pg({make_point({0, 0}), make_point({2, 5})}), pr({make_point({1, 3}), make_point({-4, 1})});
  Rng a(77), b(77);
  const auto x = blend_sample(pg, pr, 300, a);
  const auto y = blend_sample(pg, pr, 300, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
}
