#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ridematch/baselines.hpp"
#include "ridematch/random.hpp"
#include "support.hpp"

using namespace ridematch;
using ridematch::testing::make_ride;

namespace {

const RoadNetwork& grid() {
  static const RoadNetwork net = build_grid_network(20, 20, 250, derive_seed(9, "network"));
  return net;
}

std::vector<Ride> commute(std::size_t n, std::uint64_t seed) {
  RoutingLedger ledger;
  CommuteSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.spread_m = 250;
  spec.core_spread_m = 400;
  return synth_commute(grid(), spec, ledger).rides;
}

// Second implementation of the haversine matching utility: enumerate stop
// sequences and price each leg directly.
struct RefMatch {
  bool feasible;
  double utility;
};

RefMatch reference_match(const Ride& a, const Ride& b, double speed, double max_delay, bool proxy) {
  if (proxy && haversine_km(a.pickup, b.pickup) * 1000.0 / speed > max_delay) return {false, 0.0};
  const GeoPoint seqs[4][4] = {{a.pickup, b.pickup, a.dropoff, b.dropoff},
                               {a.pickup, b.pickup, b.dropoff, a.dropoff},
                               {b.pickup, a.pickup, b.dropoff, a.dropoff},
                               {b.pickup, a.pickup, a.dropoff, b.dropoff}};
  double best = 1e300;
  for (const auto& s : seqs) {
    best = std::min(best, haversine_km(s[0], s[1]) + haversine_km(s[1], s[2]) + haversine_km(s[2], s[3]));
  }
  const double total = haversine_km(a.pickup, a.dropoff) + haversine_km(b.pickup, b.dropoff);
  return {true, std::max(0.0, total - best)};
}

std::vector<RideId> reference_topk(const std::vector<Ride>& rides, const Ride& q, const std::vector<RideId>& pool,
                                   std::size_t k, const HaversineOptions& opt) {
  std::vector<std::pair<double, RideId>> scored;
  for (RideId id : pool) {
    if (id == q.id) continue;
    const auto& other = *std::find_if(rides.begin(), rides.end(), [&](const Ride& r) { return r.id == id; });
    const auto m = reference_match(q, other, opt.nominal_speed_mps, opt.max_delay_s, opt.delay_proxy);
    if (m.feasible) scored.push_back({-m.utility, id});
  }
  std::sort(scored.begin(), scored.end());
  std::vector<RideId> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

}  // namespace

TEST(Closeby, TwoRidesPointAtEachOther) {
  const std::vector<Ride> rides = {make_ride(grid(), 1, 0, 50, 0), make_ride(grid(), 2, 399, 300, 0)};
  const auto p = closeby(rides, 1);
  EXPECT_EQ(p.at(1), std::vector<RideId>{2});
  EXPECT_EQ(p.at(2), std::vector<RideId>{1});
}

TEST(Closeby, CoLocatedPickupsTieById) {
  const std::vector<Ride> rides = {make_ride(grid(), 7, 10, 50, 0), make_ride(grid(), 3, 10, 60, 0),
                                   make_ride(grid(), 5, 10, 70, 0), make_ride(grid(), 1, 11, 70, 0)};
  const auto p = closeby(rides, 2);
  EXPECT_EQ(p.at(7), (std::vector<RideId>{3, 5}));
  EXPECT_EQ(p.at(3), (std::vector<RideId>{5, 7}));
  EXPECT_EQ(p.at(1), (std::vector<RideId>{3, 5}));
}

TEST(Closeby, MatchesBruteForceNearestPickups) {
  const auto rides = commute(200, 4);
  const std::size_t k = 10;
  const auto p = closeby(rides, k);
  for (const auto& q : rides) {
    std::vector<std::pair<double, RideId>> all;
    for (const auto& r : rides)
      if (r.id != q.id) all.push_back({haversine_km(q.pickup, r.pickup), r.id});
    std::sort(all.begin(), all.end());
    const auto& got = p.at(q.id);
    ASSERT_EQ(got.size(), k);
    for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(got[i], all[i].second) << "ride " << q.id << " rank " << i;
  }
}

TEST(HaversineMatch, IdenticalRidesSaveOneRide) {
  const auto r = to_haversine_ride(make_ride(grid(), 1, 21, 378, 100));
  const auto m = haversine_match(r, r, {});
  ASSERT_TRUE(m.feasible);
  EXPECT_NEAR(m.utility_km, r.haversine_cost_km, 1e-12);
  EXPECT_GT(r.haversine_cost_km, 0.0);
}

TEST(HaversineMatch, OppositeDirectionsFarApartIsZero) {
  // Corner to corner in opposite directions: no ordering beats two solo rides.
  const auto a = to_haversine_ride(make_ride(grid(), 1, 0, 399, 0));
  const auto b = to_haversine_ride(make_ride(grid(), 2, 399, 0, 0));
  HaversineOptions opt;
  opt.delay_proxy = false;
  const auto m = haversine_match(a, b, opt);
  EXPECT_TRUE(m.feasible);
  EXPECT_EQ(m.utility_km, 0.0);
}

TEST(HaversineMatch, DelayProxyGatesDistantPickups) {
  const auto a = to_haversine_ride(make_ride(grid(), 1, 0, 20, 0));
  const auto b = to_haversine_ride(make_ride(grid(), 2, 399, 379, 0));
  HaversineOptions opt;
  opt.max_delay_s = 60;
  EXPECT_FALSE(haversine_match(a, b, opt).feasible);
  opt.delay_proxy = false;
  EXPECT_TRUE(haversine_match(a, b, opt).feasible);
}

TEST(HaversineMatch, AgreesWithReferenceAndIsSymmetric) {
  const auto rides = commute(100, 5);
  HaversineOptions opt;
  opt.max_delay_s = 200;  // tight enough that the proxy rejects some pairs
  std::size_t rejected = 0;
  for (const auto& a : rides) {
    for (const auto& b : rides) {
      const auto got = haversine_match(to_haversine_ride(a), to_haversine_ride(b), opt);
      const auto ref = reference_match(a, b, opt.nominal_speed_mps, opt.max_delay_s, true);
      ASSERT_EQ(got.feasible, ref.feasible);
      EXPECT_NEAR(got.utility_km, ref.utility, 1e-9);
      EXPECT_EQ(got.utility_km, haversine_match(to_haversine_ride(b), to_haversine_ride(a), opt).utility_km);
      rejected += !got.feasible;
    }
  }
  EXPECT_GT(rejected, 0u);
}

TEST(HaversineTopk, MatchesReferenceRecomputation) {
  const auto rides = commute(100, 6);
  std::vector<RideId> ids;
  for (const auto& r : rides) ids.push_back(r.id);
  const HaversineOptions opt;
  const auto p = haversine_topk(rides, 10, opt);
  for (const auto& q : rides) EXPECT_EQ(p.at(q.id), reference_topk(rides, q, ids, 10, opt)) << q.id;
}

TEST(ClosebyHaversine, RejectsPoolSmallerThanK) {
  const auto rides = commute(20, 7);
  EXPECT_THROW(closeby_haversine(rides, 10, 5), std::invalid_argument);
}

TEST(ClosebyHaversine, SaturatedPoolEqualsExhaustive) {
  const auto rides = commute(80, 8);
  HaversineOptions opt;
  opt.max_delay_s = 150;
  EXPECT_EQ(closeby_haversine(rides, 10, 79, opt), haversine_topk(rides, 10, opt));
  EXPECT_EQ(closeby_haversine(rides, 10, 1000, opt), haversine_topk(rides, 10, opt));
}

TEST(ClosebyHaversine, AgreesWithTwoStageReference) {
  const auto rides = commute(300, 9);
  const std::size_t m = 40, k = 10;
  const HaversineOptions opt;
  const auto got = closeby_haversine(rides, k, m, opt);
  for (const auto& q : rides) {
    // Stage one by sorting every pickup distance.
    std::vector<std::pair<double, RideId>> near;
    for (const auto& r : rides)
      if (r.id != q.id) near.push_back({haversine_km(q.pickup, r.pickup), r.id});
    std::sort(near.begin(), near.end());
    std::vector<RideId> pool;
    for (std::size_t i = 0; i < m; ++i) pool.push_back(near[i].second);
    EXPECT_EQ(got.at(q.id), reference_topk(rides, q, pool, k, opt)) << q.id;
  }
}

TEST(ClosebyHaversine, ContainedInStageOne) {
  const auto rides = commute(250, 10);
  const auto stage1 = closeby(rides, 30);
  const auto got = closeby_haversine(rides, 10, 30);
  for (const auto& [id, list] : got) {
    const std::set<RideId> pool(stage1.at(id).begin(), stage1.at(id).end());
    for (RideId r : list) EXPECT_TRUE(pool.contains(r));
  }
}

TEST(Baselines, Deterministic) {
  const auto rides = commute(120, 11);
  EXPECT_EQ(closeby(rides, 10), closeby(rides, 10));
  EXPECT_EQ(haversine_topk(rides, 10), haversine_topk(rides, 10));
  EXPECT_EQ(closeby_haversine(rides, 10, 50), closeby_haversine(rides, 10, 50));
}
