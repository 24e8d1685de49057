#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "ridematch/network.hpp"
#include "ridematch/roadnet.hpp"
#include "ridematch/trips.hpp"
#include "ridematch/utility.hpp"

namespace ridematch::testing {

inline Ride make_ride(const RoadNetwork& net, RideId id, NodeId s, NodeId t, std::int64_t request_time,
                      int alternates = 1) {
  Ride r;
  r.id = id;
  r.pickup = net.point(s);
  r.dropoff = net.point(t);
  r.pickup_node = s;
  r.dropoff_node = t;
  r.request_time = request_time;
  r.routes = route_nodes(net, s, t, alternates);
  r.cost = r.routes.front().total_duration;
  return r;
}

/// Best total weight over every matching, by exhaustive recursion.
inline double exhaustive_matching(std::size_t n, const std::vector<WeightedEdge>& edges) {
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (const auto& e : edges) w[e.u][e.v] = w[e.v][e.u] = std::max(w[e.u][e.v], e.weight);
  std::vector<bool> used(n, false);
  std::function<double(std::size_t)> best = [&](std::size_t i) -> double {
    while (i < n && used[i]) ++i;
    if (i >= n) return 0.0;
    used[i] = true;
    double result = best(i + 1);  // i stays single
    for (std::size_t j = i + 1; j < n; ++j) {
      if (used[j] || w[i][j] <= 0.0) continue;
      used[j] = true;
      result = std::max(result, w[i][j] + best(i + 1));
      used[j] = false;
    }
    used[i] = false;
    return result;
  };
  return best(0);
}

/// Tie-aware recall@k of proposed lists against the exhaustive top-k, over
/// every `stride`-th ride. The reference set T holds the oracle's entries
/// with positive utility; a proposal is a hit when its utility is positive
/// and at least the utility of T's last entry. Hits are capped at |T|.
/// Rides with empty T are skipped. Returns -1 when no ride qualifies.
template <typename Proposed>
double tie_aware_recall(std::span<const Ride> rides, const Proposed& proposed, const RoadNetwork& net,
                        std::size_t k, double max_delay_s, std::size_t stride = 1) {
  std::map<RideId, const Ride*> by_id;
  for (const auto& r : rides) by_id[r.id] = &r;
  double sum = 0.0;
  std::size_t queries = 0;
  for (std::size_t i = 0; i < rides.size(); i += stride) {
    const Ride& q = rides[i];
    std::vector<ScoredRide> top;
    for (const auto& s : brute_force_topk(rides, q, k, net, max_delay_s))
      if (s.score > 0.0) top.push_back(s);
    if (top.empty()) continue;
    const double tau = top.back().score;
    std::size_t hits = 0;
    const auto it = proposed.find(q.id);
    if (it != proposed.end()) {
      for (const auto& m : it->second) {
        const Ride& other = *by_id.at(m.id);
        const auto ev = evaluate_match(q, other, lookup_cross_segments(q, other, net), max_delay_s);
        if (ev.utility > 0.0 && ev.utility >= tau) ++hits;
      }
    }
    sum += static_cast<double>(std::min(hits, top.size())) / static_cast<double>(top.size());
    ++queries;
  }
  return queries == 0 ? -1.0 : sum / static_cast<double>(queries);
}

}  // namespace ridematch::testing
