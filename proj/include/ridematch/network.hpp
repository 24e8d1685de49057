#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ridematch/baselines.hpp"
#include "ridematch/roadnet.hpp"
#include "ridematch/trips.hpp"

namespace ridematch {

struct NetworkEdge {
  RideId u = 0;  // u < v
  RideId v = 0;
  double weight = 0.0;  // exact matching utility, seconds
  std::string provenance;
};

/// Undirected weighted graph over rides: no self loops, no duplicate edges,
/// positive weights only.
struct ShareabilityNetwork {
  std::vector<RideId> nodes;      // ascending
  std::vector<NetworkEdge> edges;  // ascending (u, v)
  std::size_t evaluated_pairs = 0;
};

struct MatchingResult {
  std::vector<std::pair<RideId, RideId>> pairs;  // first < second, ascending
  double total_utility = 0.0;
  std::vector<RideId> unmatched;
};

/// Evaluate every distinct proposed pair (either direction) with the exact
/// duration-based matching utility. Cross segments for all pairs go through
/// one batch_route call, so the ledger grows by exactly 6 calls per
/// evaluated pair. Zero-utility pairs are dropped. Proposals naming
/// unknown rides throw std::invalid_argument.
ShareabilityNetwork build_network(std::span<const Ride> rides, const Proposals& proposals, const RoadNetwork& net,
                                  double max_delay_s, RoutingLedger& ledger, const std::string& provenance = {});

/// General-graph edge for the matcher; vertices are 0..n-1.
struct WeightedEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;
};

/// Maximum-weight matching on a general graph (Edmonds' blossom algorithm
/// with dual variables, O(n^3)). Returns mate[v] or -1. Exact for integer
/// weights; edges with non-positive weight are never used.
std::vector<long> max_weight_matching(std::size_t vertex_count, std::span<const WeightedEdge> edges);

MatchingResult max_weight_matching(const ShareabilityNetwork& g);

/// Heaviest-edge-first greedy 1/2-approximation for timing runs only.
MatchingResult greedy_matching(const ShareabilityNetwork& g);

inline constexpr std::size_t kDefaultOptimalCap = 3000;

/// Complete network (every pair evaluated) plus exact matching. Throws
/// std::invalid_argument when rides exceed `cap`.
MatchingResult optimal_utility(std::span<const Ride> rides, const RoadNetwork& net, double max_delay_s,
                               RoutingLedger& ledger, std::size_t cap = kDefaultOptimalCap,
                               ShareabilityNetwork* network_out = nullptr);

/// Debug dump: header u,v,weight_s,provenance.
void write_network_csv(const ShareabilityNetwork& g, std::ostream& out);

}  // namespace ridematch
