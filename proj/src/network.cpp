#include "ridematch/network.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "ridematch/utility.hpp"

namespace ridematch {

namespace {

// Pair evaluation is chunked so the request buffer stays bounded; the chunk
// is a multiple of the batch size, so batch counts match a single call.
constexpr std::size_t kPairsPerChunk = 100000;

struct PairIndex {
  std::size_t a = 0;
  std::size_t b = 0;
};

std::vector<NetworkEdge> evaluate_pairs(std::span<const Ride> rides, std::span<const PairIndex> pairs,
                                        const RoadNetwork& net, double max_delay_s, RoutingLedger& ledger,
                                        const std::string& provenance) {
  std::vector<NetworkEdge> edges;
  std::vector<NodePair> requests;
  for (std::size_t start = 0; start < pairs.size(); start += kPairsPerChunk) {
    const std::size_t stop = std::min(pairs.size(), start + kPairsPerChunk);
    requests.clear();
    requests.reserve((stop - start) * 6);
    for (std::size_t i = start; i < stop; ++i) {
      const auto req = cross_requests(rides[pairs[i].a], rides[pairs[i].b]);
      requests.insert(requests.end(), req.begin(), req.end());
    }
    const auto d = batch_durations(net, requests, ledger);
    for (std::size_t i = start; i < stop; ++i) {
      const std::size_t o = (i - start) * 6;
      const Ride& r = rides[pairs[i].a];
      const Ride& other = rides[pairs[i].b];
      const auto eval =
          evaluate_match(r, other, CrossSegments{d[o], d[o + 1], d[o + 2], d[o + 3], d[o + 4], d[o + 5]}, max_delay_s);
      if (eval.utility > 0.0) {
        NetworkEdge e{std::min(r.id, other.id), std::max(r.id, other.id), eval.utility, provenance};
        edges.push_back(std::move(e));
      }
    }
  }
  std::sort(edges.begin(), edges.end(),
            [](const NetworkEdge& x, const NetworkEdge& y) { return x.u != y.u ? x.u < y.u : x.v < y.v; });
  return edges;
}

std::vector<RideId> sorted_ids(std::span<const Ride> rides) {
  std::vector<RideId> ids;
  ids.reserve(rides.size());
  for (const auto& r : rides) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw std::invalid_argument("duplicate ride id");
  return ids;
}

MatchingResult assemble(const ShareabilityNetwork& g, const std::vector<std::pair<RideId, RideId>>& chosen) {
  MatchingResult out;
  out.pairs = chosen;
  for (auto& p : out.pairs)
    if (p.first > p.second) std::swap(p.first, p.second);
  std::sort(out.pairs.begin(), out.pairs.end());
  std::vector<bool> matched(g.nodes.size(), false);
  auto position = [&](RideId id) {
    return static_cast<std::size_t>(std::lower_bound(g.nodes.begin(), g.nodes.end(), id) - g.nodes.begin());
  };
  for (const auto& [a, b] : out.pairs) {
    matched[position(a)] = true;
    matched[position(b)] = true;
    const auto it = std::lower_bound(g.edges.begin(), g.edges.end(), std::pair{a, b},
                                     [](const NetworkEdge& e, const std::pair<RideId, RideId>& key) {
                                       return e.u != key.first ? e.u < key.first : e.v < key.second;
                                     });
    out.total_utility += it->weight;
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (!matched[i]) out.unmatched.push_back(g.nodes[i]);
  return out;
}

}  // namespace

ShareabilityNetwork build_network(std::span<const Ride> rides, const Proposals& proposals, const RoadNetwork& net,
                                  double max_delay_s, RoutingLedger& ledger, const std::string& provenance) {
  ShareabilityNetwork g;
  g.nodes = sorted_ids(rides);
  std::unordered_map<RideId, std::size_t> index;
  index.reserve(rides.size());
  for (std::size_t i = 0; i < rides.size(); ++i) index.emplace(rides[i].id, i);
  auto lookup = [&](RideId id) {
    const auto it = index.find(id);
    if (it == index.end()) throw std::invalid_argument("proposal names unknown ride " + std::to_string(id));
    return it->second;
  };

  std::vector<std::pair<RideId, RideId>> keys;
  for (const auto& [q, candidates] : proposals) {
    lookup(q);
    for (RideId c : candidates) {
      lookup(c);
      if (c == q) continue;
      keys.emplace_back(std::min(q, c), std::max(q, c));
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::vector<PairIndex> pairs;
  pairs.reserve(keys.size());
  for (const auto& [a, b] : keys) pairs.push_back({lookup(a), lookup(b)});
  g.edges = evaluate_pairs(rides, pairs, net, max_delay_s, ledger, provenance);
  g.evaluated_pairs = pairs.size();
  return g;
}

MatchingResult max_weight_matching(const ShareabilityNetwork& g) {
  std::vector<WeightedEdge> edges;
  edges.reserve(g.edges.size());
  auto position = [&](RideId id) {
    return static_cast<std::size_t>(std::lower_bound(g.nodes.begin(), g.nodes.end(), id) - g.nodes.begin());
  };
  for (const auto& e : g.edges) edges.push_back({position(e.u), position(e.v), e.weight});
  const auto mate = max_weight_matching(g.nodes.size(), edges);
  std::vector<std::pair<RideId, RideId>> chosen;
  for (std::size_t i = 0; i < mate.size(); ++i)
    if (mate[i] > static_cast<long>(i)) chosen.emplace_back(g.nodes[i], g.nodes[static_cast<std::size_t>(mate[i])]);
  return assemble(g, chosen);
}

MatchingResult greedy_matching(const ShareabilityNetwork& g) {
  std::vector<const NetworkEdge*> order;
  order.reserve(g.edges.size());
  for (const auto& e : g.edges) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(),
                   [](const NetworkEdge* a, const NetworkEdge* b) { return a->weight > b->weight; });
  std::unordered_map<RideId, bool> used;
  std::vector<std::pair<RideId, RideId>> chosen;
  for (const auto* e : order) {
    if (used[e->u] || used[e->v]) continue;
    used[e->u] = used[e->v] = true;
    chosen.emplace_back(e->u, e->v);
  }
  return assemble(g, chosen);
}

MatchingResult optimal_utility(std::span<const Ride> rides, const RoadNetwork& net, double max_delay_s,
                               RoutingLedger& ledger, std::size_t cap, ShareabilityNetwork* network_out) {
  if (rides.size() > cap)
    throw std::invalid_argument("optimal matching limited to " + std::to_string(cap) + " rides, got " +
                                std::to_string(rides.size()));
  ShareabilityNetwork g;
  g.nodes = sorted_ids(rides);
  std::vector<PairIndex> pairs;
  pairs.reserve(rides.size() * (rides.size() - (rides.empty() ? 0 : 1)) / 2);
  for (std::size_t a = 0; a < rides.size(); ++a)
    for (std::size_t b = a + 1; b < rides.size(); ++b) pairs.push_back({a, b});
  g.edges = evaluate_pairs(rides, pairs, net, max_delay_s, ledger, "optimal");
  g.evaluated_pairs = pairs.size();
  auto result = max_weight_matching(g);
  if (network_out) *network_out = std::move(g);
  return result;
}

void write_network_csv(const ShareabilityNetwork& g, std::ostream& out) {
  out << "u,v,weight_s,provenance\n";
  char buf[64];
  for (const auto& e : g.edges) {
    std::snprintf(buf, sizeof buf, "%.6g", e.weight);
    out << e.u << ',' << e.v << ',' << buf << ',' << e.provenance << '\n';
  }
}

}  // namespace ridematch
