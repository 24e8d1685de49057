#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "ridematch/errors.hpp"
#include "ridematch/random.hpp"
#include "ridematch/represent.hpp"
#include "support.hpp"

using namespace ridematch;
using ridematch::testing::make_ride;

namespace {

const RoadNetwork& grid() {
  static const RoadNetwork net = build_grid_network(10, 10, 250, 31);
  return net;
}

SpaceTimeEdge synthetic_edge(std::uint64_t a, std::uint64_t b) {
  return {{CellId{"c" + std::to_string(a)}, TimeBucket{0}}, {CellId{"c" + std::to_string(b)}, TimeBucket{0}}};
}

SparseVector random_sparse(Rng& rng, std::size_t entries, std::uint64_t universe) {
  SparseVector v;
  while (v.size() < entries) v.add(synthetic_edge(rng.index(universe), rng.index(universe)), rng.uniform(-2, 2));
  return v;
}

DenseVector random_dense(Rng& rng, Eigen::Index d) {
  DenseVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
  return v;
}

Route manual_route(std::vector<GeoPoint> points, std::vector<double> durations) {
  Route r;
  r.points = std::move(points);
  r.segment_durations = std::move(durations);
  for (double d : r.segment_durations) r.total_duration += d;
  r.nodes.resize(r.points.size());
  return r;
}

}  // namespace

TEST(StEdgeSet, SingleCellSingleBucketIsEmpty) {
  const GeoPoint p{40.75, -73.99};
  const auto r = manual_route({p, offset_meters(p, 1, 1), offset_meters(p, 2, 2)}, {3, 4});
  EXPECT_TRUE(st_edge_set(r, 0, 7, 1200).empty());
}

TEST(StEdgeSet, TwoCellsOneEdge) {
  const GeoPoint a{40.75, -73.99};
  const GeoPoint b = offset_meters(a, 0, 400);
  const auto r = manual_route({a, b}, {42});
  const auto s = st_edge_set(r, 0, 7, 1200);
  ASSERT_EQ(s.size(), 1u);
  const auto& [edge, cost] = *s.begin();
  EXPECT_EQ(edge.from.cell, geohash_encode(a, 7));
  EXPECT_EQ(edge.to.cell, geohash_encode(b, 7));
  EXPECT_EQ(edge.from.bucket.index, 0);
  EXPECT_EQ(edge.to.bucket.index, 0);
  EXPECT_EQ(cost, 42.0);
}

TEST(StEdgeSet, CostAccumulatesUntilNodeChanges) {
  const GeoPoint a{40.75, -73.99};
  // Two hops inside the first cell, then a jump.
  const auto r = manual_route({a, offset_meters(a, 1, 0), offset_meters(a, 2, 0), offset_meters(a, 0, 500)},
                              {5, 6, 7});
  const auto s = st_edge_set(r, 0, 7, 1200);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.begin()->second, 18.0);
}

TEST(StEdgeSet, TimeBucketChangeCreatesEdge) {
  const GeoPoint a{40.75, -73.99};
  const auto r = manual_route({a, offset_meters(a, 1, 0)}, {100});
  const auto s = st_edge_set(r, 1150, 7, 1200);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.begin()->first.from.bucket.index, 0);
  EXPECT_EQ(s.begin()->first.to.bucket.index, 1);
}

TEST(StEdgeSet, RevisitedEdgesAccumulate) {
  const GeoPoint a{40.75, -73.99};
  const GeoPoint b = offset_meters(a, 0, 400);
  const auto r = manual_route({a, b, a, b}, {10, 11, 12});
  const auto s = st_edge_set(r, 0, 7, 1e9);
  ASSERT_EQ(s.size(), 2u);
  const SpaceTimeEdge ab{{geohash_encode(a, 7), {0}}, {geohash_encode(b, 7), {0}}};
  EXPECT_EQ(s.at(ab), 22.0);
}

TEST(StEdgeSet, CostsSumToRouteDurationAcrossTransitions) {
  const auto& net = grid();
  const auto ride = make_ride(net, 0, 0, 99, 1465372800);
  const auto s = st_edge_set(ride.routes[0], static_cast<double>(ride.request_time), 7, 1200);
  double total = 0.0;
  for (const auto& [e, c] : s) {
    EXPECT_GT(c, 0.0);
    EXPECT_NE(e.from, e.to);
    total += c;
  }
  // Every grid hop changes geohash-7 cell at 250 m spacing.
  EXPECT_DOUBLE_EQ(total, ride.cost);
}

TEST(StEdgeSet, ReversedRouteSharesNothing) {
  const auto& net = grid();
  for (NodeId t : {99u, 45u, 9u, 90u}) {
    const auto fwd = make_ride(net, 0, 0, t, 1000);
    const auto back = make_ride(net, 1, t, 0, 1000);
    const auto a = st_edge_set(fwd.routes[0], 1000, 7, 1200);
    const auto b = st_edge_set(back.routes[0], 1000, 7, 1200);
    EXPECT_EQ(intersection_cost(a, b), 0.0);
  }
}

TEST(StEdgeSet, RejectsEmptyRoute) {
  EXPECT_THROW(st_edge_set(Route{}, 0, 7, 1200), std::invalid_argument);
}

TEST(Vectors, PreprocessingAndQueryMagnitudes) {
  SpaceTimeEdgeSet s{{synthetic_edge(1, 2), 30.0}, {synthetic_edge(2, 3), 45.0}};
  const auto p = preprocessing_vector(s);
  const auto q = query_vector(s);
  EXPECT_EQ(p.entries().at(synthetic_edge(1, 2)), 30.0);
  EXPECT_EQ(p.entries().at(synthetic_edge(2, 3)), 45.0);
  for (const auto& [k, v] : q.entries()) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(dot(p, q), 75.0);
  EXPECT_TRUE(preprocessing_vector({}).empty());
  EXPECT_TRUE(query_vector({}).empty());
}

TEST(Vectors, InnerProductEqualsIntersectionCost) {
  Rng rng(40);
  for (int trial = 0; trial < 300; ++trial) {
    SpaceTimeEdgeSet a, b;
    for (int i = 0; i < 30; ++i) a[synthetic_edge(rng.index(12), rng.index(12))] = 1 + static_cast<double>(rng.index(90));
    for (int i = 0; i < 30; ++i) b[synthetic_edge(rng.index(12), rng.index(12))] = 1 + static_cast<double>(rng.index(90));
    double expected = 0.0;
    for (const auto& [e, c] : a)
      if (b.count(e)) expected += c;
    EXPECT_EQ(dot(preprocessing_vector(a), query_vector(b)), expected);
    EXPECT_EQ(intersection_cost(a, b), expected);
  }
}

TEST(SparseVectorTest, ZeroEntriesNeverStored) {
  SparseVector v;
  v.add(synthetic_edge(1, 2), 0.0);
  EXPECT_TRUE(v.empty());
  v.add(synthetic_edge(1, 2), 3.0);
  v.add(synthetic_edge(1, 2), -3.0);
  EXPECT_TRUE(v.empty());
}

TEST(Normalize, MaxNormBecomesU) {
  Rng rng(41);
  std::vector<SparseVector> vs;
  for (int i = 0; i < 20; ++i) vs.push_back(random_sparse(rng, 10, 50));
  vs.emplace_back();
  normalize_dataset(vs, 0.75);
  double max_norm = 0;
  for (const auto& v : vs) max_norm = std::max(max_norm, v.norm());
  EXPECT_NEAR(max_norm, 0.75, 1e-15);
}

TEST(Normalize, DenseAndRankingInvariance) {
  Rng rng(42);
  std::vector<DenseVector> data;
  for (int i = 0; i < 50; ++i) data.push_back(random_dense(rng, 16) * rng.uniform(0.1, 10));
  const DenseVector q = random_dense(rng, 16) * 7.0;
  auto ranking = [&](const std::vector<DenseVector>& d, const DenseVector& query) {
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return d[a].dot(query) > d[b].dot(query); });
    return idx;
  };
  const auto before = ranking(data, q);
  auto scaled = data;
  const auto n = normalize_dataset(std::span<DenseVector>(scaled), 0.75);
  EXPECT_GT(n.scale, 0.0);
  double max_norm = 0;
  for (const auto& v : scaled) max_norm = std::max(max_norm, v.norm());
  EXPECT_NEAR(max_norm, 0.75, 1e-12);
  EXPECT_EQ(ranking(scaled, unit_normalize(q)), before);
}

TEST(Normalize, AllZeroIsDegenerate) {
  std::vector<SparseVector> vs(3);
  EXPECT_THROW(normalize_dataset(vs), DegenerateInputError);
  std::vector<DenseVector> ds(2, DenseVector::Zero(4));
  EXPECT_THROW(normalize_dataset(std::span<DenseVector>(ds)), DegenerateInputError);
}

TEST(FeatureHash, EmptyAndSingleEntry) {
  EXPECT_EQ(feature_hash(SparseVector{}, 64, 1), DenseVector::Zero(64));
  SparseVector v;
  v.add(synthetic_edge(3, 4), 2.5);
  const auto h = feature_hash(v, 64, 9);
  EXPECT_EQ((h.array() != 0).count(), 1);
  EXPECT_EQ(h.cwiseAbs().maxCoeff(), 2.5);
}

TEST(FeatureHash, DeterministicAndSeedDependent) {
  Rng rng(43);
  const auto v = random_sparse(rng, 40, 100);
  EXPECT_EQ(feature_hash(v, 256, 5), feature_hash(v, 256, 5));
  EXPECT_NE(feature_hash(v, 256, 5), feature_hash(v, 256, 6));
}

TEST(FeatureHash, UnbiasedInnerProducts) {
  Rng rng(44);
  for (int trial = 0; trial < 5; ++trial) {
    // Shared support guarantees a nonzero inner product.
    SparseVector x, y;
    for (int i = 0; i < 40; ++i) {
      const auto e = synthetic_edge(rng.index(1000), rng.index(1000));
      x.add(e, rng.uniform(0.5, 2));
      if (i % 2 == 0) y.add(e, rng.uniform(0.5, 2));
    }
    for (int i = 0; i < 40; ++i) y.add(synthetic_edge(1000 + rng.index(1000), rng.index(1000)), rng.uniform(0.5, 2));
    const double exact = dot(x, y);
    ASSERT_NE(exact, 0.0);
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) mean += feature_hash(x, 1024, seed).dot(feature_hash(y, 1024, seed));
    mean /= 200;
    EXPECT_NEAR(mean, exact, 0.05 * std::abs(exact));
  }
}

TEST(FeatureHash, RejectsNonPowerOfTwo) {
  EXPECT_THROW(feature_hash(SparseVector{}, 100, 1), std::invalid_argument);
  EXPECT_THROW(feature_hash(SparseVector{}, 1, 1), std::invalid_argument);
}

TEST(TransformP, ZeroVector) {
  const DenseVector p = transform_P(DenseVector::Zero(4), 2);
  ASSERT_EQ(p.size(), 6);
  EXPECT_EQ(p.head(4), DenseVector::Zero(4));
  EXPECT_EQ(p(4), 0.5);
  EXPECT_EQ(p(5), 0.5);
}

TEST(TransformP, NormThreeQuarters) {
  DenseVector x = DenseVector::Zero(8);
  x(3) = 0.75;
  const DenseVector p = transform_P(x, 2);
  EXPECT_DOUBLE_EQ(p(8), -0.0625);
  EXPECT_DOUBLE_EQ(p(9), 0.18359375);
}

TEST(TransformP, NormIdentity) {
  Rng rng(45);
  for (int m = 1; m <= 4; ++m) {
    for (int i = 0; i < 200; ++i) {
      const DenseVector x = unit_normalize(random_dense(rng, 12)) * rng.uniform(0, 0.99);
      const double nx = x.norm();
      EXPECT_NEAR(transform_P(x, m).squaredNorm(), m / 4.0 + std::pow(nx, std::pow(2.0, m + 1)), 1e-12);
    }
  }
}

TEST(TransformP, RejectsNormAtLeastOne) {
  DenseVector x = DenseVector::Zero(3);
  x(0) = 1.0;
  EXPECT_THROW(transform_P(x, 2), std::invalid_argument);
}

TEST(TransformQ, AppendsZerosAndKeepsUnitNorm) {
  Rng rng(46);
  const DenseVector q = unit_normalize(random_dense(rng, 10));
  const DenseVector t = transform_Q(q, 2);
  ASSERT_EQ(t.size(), 12);
  EXPECT_NEAR(t.norm(), 1.0, 1e-15);
  EXPECT_EQ(t(10), 0.0);
  EXPECT_EQ(t(11), 0.0);
  EXPECT_THROW(transform_Q(DenseVector::Zero(4), 2), DegenerateInputError);
  EXPECT_THROW(unit_normalize(DenseVector::Zero(4)), DegenerateInputError);
}

TEST(Transforms, InnerProductIdentity) {
  Rng rng(47);
  for (int i = 0; i < 1000; ++i) {
    const DenseVector q = unit_normalize(random_dense(rng, 32));
    const DenseVector p = unit_normalize(random_dense(rng, 32)) * rng.uniform(0, 0.75);
    EXPECT_NEAR(transform_Q(q, 2).dot(transform_P(p, 2)), q.dot(p), 1e-12);
  }
}

TEST(Transforms, WorkForFloatScalars) {
  Eigen::VectorXf x = Eigen::VectorXf::Constant(4, 0.25f);
  const Eigen::VectorXf p = transform_P(x, 2);
  EXPECT_FLOAT_EQ(p(4), 0.25f);
  const Eigen::VectorXf q = transform_Q(unit_normalize(x), 2);
  EXPECT_FLOAT_EQ(q.norm(), 1.0f);
}

TEST(Center, SubtractsMeanAndShiftsScoresUniformly) {
  Rng rng(48);
  std::vector<DenseVector> data;
  for (int i = 0; i < 10; ++i) data.push_back(random_dense(rng, 8));
  const auto original = data;
  const DenseVector q = random_dense(rng, 8);
  const DenseVector mean = center_dataset(std::span<DenseVector>(data));
  DenseVector sum = DenseVector::Zero(8);
  for (const auto& v : data) sum += v;
  EXPECT_LT(sum.norm(), 1e-12);
  for (std::size_t i = 0; i < data.size(); ++i)
    EXPECT_NEAR(original[i].dot(q) - data[i].dot(q), mean.dot(q), 1e-12);
}
