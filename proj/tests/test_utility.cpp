#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ridematch/random.hpp"
#include "ridematch/utility.hpp"
#include "support.hpp"

using namespace ridematch;
using ridematch::testing::make_ride;

namespace {

const RoadNetwork& grid5() {
  static const RoadNetwork net = build_grid_network(5, 5, 300, 21);
  return net;
}

const RoadNetwork& grid10() {
  static const RoadNetwork net = build_grid_network(10, 10, 250, 22);
  return net;
}

// Independent oracle: enumerate the four stop sequences directly.
struct OracleResult {
  bool feasible = false;
  double combined = std::numeric_limits<double>::infinity();
  double utility = 0.0;
};

OracleResult oracle(const RoadNetwork& net, const Ride& a, const Ride& b, double max_delay) {
  OracleResult out;
  if (std::abs(static_cast<double>(a.request_time - b.request_time)) > max_delay) return out;
  auto d = [&](NodeId x, NodeId y) { return *net.shortest_duration(x, y); };
  struct Seq {
    NodeId stops[4];
  };
  const Seq seqs[4] = {{{a.pickup_node, b.pickup_node, a.dropoff_node, b.dropoff_node}},
                       {{a.pickup_node, b.pickup_node, b.dropoff_node, a.dropoff_node}},
                       {{b.pickup_node, a.pickup_node, b.dropoff_node, a.dropoff_node}},
                       {{b.pickup_node, a.pickup_node, a.dropoff_node, b.dropoff_node}}};
  for (const auto& s : seqs) {
    // The second pickup waits for the drive between the two pickups.
    if (d(s.stops[0], s.stops[1]) > max_delay) continue;
    const double cost = d(s.stops[0], s.stops[1]) + d(s.stops[1], s.stops[2]) + d(s.stops[2], s.stops[3]);
    if (cost < out.combined) {
      out.combined = cost;
      out.feasible = true;
    }
  }
  if (out.feasible) out.utility = std::max(0.0, a.cost + b.cost - out.combined);
  return out;
}

std::vector<Ride> random_rides(const RoadNetwork& net, std::size_t n, std::uint64_t seed, std::int64_t spread_s) {
  Rng rng(seed);
  std::vector<Ride> rides;
  while (rides.size() < n) {
    const auto s = static_cast<NodeId>(rng.index(net.node_count()));
    const auto t = static_cast<NodeId>(rng.index(net.node_count()));
    if (s == t) continue;
    rides.push_back(make_ride(net, static_cast<RideId>(rides.size()), s, t,
                              1000 + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(spread_s)))));
  }
  return rides;
}

}  // namespace

TEST(CombinedCost, IdenticalRideCostsOneTraversal) {
  const auto& net = grid5();
  const auto r = make_ride(net, 0, 0, 24, 100);
  auto r2 = r;
  r2.id = 1;
  RoutingLedger ledger;
  const auto eval = combined_cost(r, r2, net, ledger);
  EXPECT_TRUE(eval.feasible);
  EXPECT_EQ(eval.combined_cost, r.cost);
  EXPECT_EQ(eval.utility, r.cost);
  EXPECT_EQ(ledger.call_count(), 6u);
  EXPECT_EQ(ledger.batch_count(), 1u);
}

TEST(CombinedCost, FarApartRidesAreInfeasible) {
  const auto& net = grid10();
  const auto a = make_ride(net, 0, 0, 1, 100);    // bottom-left corner heading east
  const auto b = make_ride(net, 1, 99, 98, 100);  // top-right corner heading west
  RoutingLedger ledger;
  const auto eval = combined_cost(a, b, net, ledger, 120.0);
  EXPECT_FALSE(eval.feasible);
  EXPECT_EQ(eval.utility, 0.0);
  EXPECT_TRUE(std::isinf(eval.combined_cost));
}

TEST(CombinedCost, RequestTimeGapBeyondDelayIsInfeasible) {
  const auto& net = grid5();
  const auto a = make_ride(net, 0, 0, 24, 0);
  const auto b = make_ride(net, 1, 0, 24, 601);
  RoutingLedger ledger;
  EXPECT_FALSE(combined_cost(a, b, net, ledger).feasible);
  const auto c = make_ride(net, 2, 0, 24, 600);
  EXPECT_TRUE(combined_cost(a, c, net, ledger).feasible);
}

TEST(CombinedCost, OverlappingRidesMatchHandComputation) {
  const auto& net = grid5();
  // Both head east along the bottom row; b starts one block later.
  const auto a = make_ride(net, 0, 0, 3, 0);
  const auto b = make_ride(net, 1, 1, 4, 30);
  RoutingLedger ledger;
  const auto eval = combined_cost(a, b, net, ledger);
  const auto want = oracle(net, a, b, kDefaultMaxDelayS);
  ASSERT_TRUE(want.feasible);
  EXPECT_EQ(eval.combined_cost, want.combined);
  EXPECT_EQ(eval.utility, want.utility);
  EXPECT_GT(eval.utility, 0.0);
}

TEST(CombinedCost, AgreesWithOracleOnRandomPairs) {
  const auto& net = grid10();
  const auto rides = random_rides(net, 120, 4, 900);
  RoutingLedger ledger;
  for (std::size_t i = 0; i + 1 < rides.size(); i += 2) {
    for (double delay : {60.0, 300.0, 600.0}) {
      const auto eval = combined_cost(rides[i], rides[i + 1], net, ledger, delay);
      const auto want = oracle(net, rides[i], rides[i + 1], delay);
      EXPECT_EQ(eval.feasible, want.feasible);
      EXPECT_EQ(eval.utility, want.utility);
      if (want.feasible) EXPECT_EQ(eval.combined_cost, want.combined);
    }
  }
}

TEST(CombinedCost, UnreachableSegmentExcludesOrdering) {
  // Two one-way chains: 0 -> 1 -> 2 and 3 -> 4; nothing connects them.
  const std::vector<GeoPoint> pts{{0, 0}, {0, 0.001}, {0, 0.002}, {0.01, 0}, {0.01, 0.001}};
  const RoadNetwork net(pts, {{0, 1, 10, 100}, {1, 2, 10, 100}, {3, 4, 10, 100}});
  const auto a = make_ride(net, 0, 0, 2, 0);
  const auto b = make_ride(net, 1, 3, 4, 0);
  const auto eval = evaluate_match(a, b, lookup_cross_segments(a, b, net), 600);
  EXPECT_FALSE(eval.feasible);
  EXPECT_EQ(eval.utility, 0.0);
  // A ride nested inside another is reachable only in the ss'tt' / ss't't orders.
  const auto c = make_ride(net, 2, 1, 2, 0);
  const auto nested = evaluate_match(a, c, lookup_cross_segments(a, c, net), 600);
  EXPECT_TRUE(nested.feasible);
  EXPECT_EQ(nested.combined_cost, 20.0);
  EXPECT_EQ(nested.utility, 10.0);
}

TEST(MatchingUtility, SymmetricExactly) {
  const auto& net = grid10();
  const auto rides = random_rides(net, 80, 5, 600);
  RoutingLedger ledger;
  for (std::size_t i = 0; i < rides.size(); ++i)
    for (std::size_t j = i + 1; j < rides.size(); j += 7)
      EXPECT_EQ(matching_utility(rides[i], rides[j], net, 600, ledger),
                matching_utility(rides[j], rides[i], net, 600, ledger));
}

TEST(MatchingUtility, BoundedByShorterRide) {
  const auto& net = grid10();
  const auto rides = random_rides(net, 100, 6, 300);
  RoutingLedger ledger;
  for (std::size_t i = 0; i < rides.size(); ++i) {
    for (std::size_t j = i + 1; j < rides.size(); j += 3) {
      const double u = matching_utility(rides[i], rides[j], net, 600, ledger);
      EXPECT_GE(u, 0.0);
      EXPECT_LE(u, std::min(rides[i].cost, rides[j].cost) + 1e-6);
    }
  }
}

TEST(MatchingUtility, FeasibilityMonotoneInDelay) {
  const auto& net = grid10();
  const auto rides = random_rides(net, 60, 7, 900);
  for (std::size_t i = 0; i < rides.size(); ++i) {
    for (std::size_t j = i + 1; j < rides.size(); ++j) {
      const auto seg = lookup_cross_segments(rides[i], rides[j], net);
      bool was_feasible = false;
      for (double delay : {30.0, 60.0, 120.0, 300.0, 600.0, 1200.0}) {
        const bool f = evaluate_match(rides[i], rides[j], seg, delay).feasible;
        EXPECT_TRUE(!was_feasible || f);
        was_feasible = f;
      }
    }
  }
}

TEST(MatchingUtility, BestOrderingRouteReproducesCombinedCost) {
  const auto& net = grid10();
  const auto rides = random_rides(net, 80, 8, 300);
  for (std::size_t i = 0; i + 1 < rides.size(); ++i) {
    const auto eval = evaluate_match(rides[i], rides[i + 1], lookup_cross_segments(rides[i], rides[i + 1], net), 600);
    if (!eval.feasible) continue;
    const auto stops = ordering_stops(rides[i], rides[i + 1], eval.best_ordering);
    double total = 0.0;
    for (int k = 0; k < 3; ++k) total += net.shortest_route(stops[k], stops[k + 1]).total_duration;
    EXPECT_NEAR(total, eval.combined_cost, 1e-9);
  }
}

TEST(MatchingUtility, RejectsNonPositiveDelay) {
  const auto& net = grid5();
  const auto a = make_ride(net, 0, 0, 24, 0);
  RoutingLedger ledger;
  EXPECT_THROW(matching_utility(a, a, net, 0.0, ledger), std::invalid_argument);
  EXPECT_THROW(matching_utility(a, a, net, -1.0, ledger), std::invalid_argument);
}

TEST(Ordering, NamesAndStops) {
  EXPECT_EQ(to_string(Ordering::ss_tt), "ss'tt'");
  const auto& net = grid5();
  const auto a = make_ride(net, 0, 0, 1, 0), b = make_ride(net, 1, 2, 3, 0);
  EXPECT_EQ(ordering_stops(a, b, Ordering::s_st_t), (std::array<NodeId, 4>{2, 0, 3, 1}));
  EXPECT_EQ(ordering_stops(a, b, Ordering::s_stt_), (std::array<NodeId, 4>{2, 0, 1, 3}));
}

TEST(BruteForceTopk, SingleOtherRide) {
  const auto& net = grid10();
  const std::vector<Ride> pool{make_ride(net, 0, 0, 99, 0), make_ride(net, 1, 99, 0, 0)};
  const auto top = brute_force_topk(pool, pool[0], 10, net);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].id, 1u);
}

TEST(BruteForceTopk, DuplicateRanksFirst) {
  const auto& net = grid10();
  auto pool = random_rides(net, 30, 9, 600);
  const Ride q = pool[4];
  Ride dup = q;
  dup.id = 1000;
  pool.push_back(dup);
  const auto top = brute_force_topk(pool, q, 5, net);
  ASSERT_FALSE(top.empty());
  EXPECT_EQ(top[0].id, 1000u);
  EXPECT_EQ(top[0].score, q.cost);
}

TEST(BruteForceTopk, MatchesPairwiseRecomputation) {
  const auto& net = grid10();
  const auto pool = random_rides(net, 50, 10, 600);
  for (const auto& q : pool) {
    std::vector<ScoredRide> all;
    for (const auto& r : pool)
      if (r.id != q.id) all.push_back({r.id, oracle(net, q, r, 600).utility});
    std::sort(all.begin(), all.end(), [](const ScoredRide& a, const ScoredRide& b) {
      return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    all.resize(10);
    EXPECT_EQ(brute_force_topk(pool, q, 10, net), all);
  }
}

TEST(BruteForceTopk, RejectsZeroK) {
  const auto& net = grid5();
  const std::vector<Ride> pool{make_ride(net, 0, 0, 24, 0)};
  EXPECT_THROW(brute_force_topk(pool, pool[0], 0, net), std::invalid_argument);
}
