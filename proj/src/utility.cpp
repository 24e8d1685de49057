#include "ridematch/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ridematch {

std::string_view to_string(Ordering o) noexcept {
  switch (o) {
    case Ordering::ss_tt: return "ss'tt'";
    case Ordering::ss_t_t: return "ss't't";
    case Ordering::s_st_t: return "s'st't";
    case Ordering::s_stt_: return "s'stt'";
  }
  return "?";
}

std::array<NodeId, 4> ordering_stops(const Ride& r, const Ride& other, Ordering o) noexcept {
  const NodeId s = r.pickup_node, t = r.dropoff_node;
  const NodeId s2 = other.pickup_node, t2 = other.dropoff_node;
  switch (o) {
    case Ordering::ss_tt: return {s, s2, t, t2};
    case Ordering::ss_t_t: return {s, s2, t2, t};
    case Ordering::s_st_t: return {s2, s, t2, t};
    case Ordering::s_stt_: return {s2, s, t, t2};
  }
  return {s, s2, t, t2};
}

std::array<NodePair, 6> cross_requests(const Ride& r, const Ride& other) noexcept {
  const NodeId s = r.pickup_node, t = r.dropoff_node;
  const NodeId s2 = other.pickup_node, t2 = other.dropoff_node;
  return {NodePair{s, s2}, NodePair{s2, s}, NodePair{t, t2}, NodePair{t2, t}, NodePair{s, t2}, NodePair{s2, t}};
}

MatchEvaluation evaluate_match(const Ride& r, const Ride& other, const CrossSegments& seg, double max_delay_s) {
  MatchEvaluation out;
  out.combined_cost = std::numeric_limits<double>::infinity();

  const double gap = std::abs(static_cast<double>(r.request_time - other.request_time));
  if (gap > max_delay_s) return out;

  const std::optional<double> own_r = r.cost;
  const std::optional<double> own_o = other.cost;
  // Legs of each ordering in stop order, plus the pickup delay of the second rider.
  struct Plan {
    Ordering ordering;
    std::optional<double> legs[3];
    std::optional<double> delay;
  };
  const Plan plans[4] = {
      {Ordering::ss_tt, {seg.s_to_s2, seg.s2_to_t, seg.t_to_t2}, seg.s_to_s2},
      {Ordering::ss_t_t, {seg.s_to_s2, own_o, seg.t2_to_t}, seg.s_to_s2},
      {Ordering::s_st_t, {seg.s2_to_s, seg.s_to_t2, seg.t2_to_t}, seg.s2_to_s},
      {Ordering::s_stt_, {seg.s2_to_s, own_r, seg.t_to_t2}, seg.s2_to_s},
  };
  for (const Plan& p : plans) {
    if (!p.legs[0] || !p.legs[1] || !p.legs[2] || !p.delay) continue;
    if (*p.delay > max_delay_s) continue;
    const double cost = *p.legs[0] + *p.legs[1] + *p.legs[2];
    if (cost < out.combined_cost) {
      out.combined_cost = cost;
      out.best_ordering = p.ordering;
      out.feasible = true;
    }
  }
  if (out.feasible) out.utility = std::max(0.0, r.cost + other.cost - out.combined_cost);
  return out;
}

CrossSegments lookup_cross_segments(const Ride& r, const Ride& other, const RoadNetwork& net) {
  const auto req = cross_requests(r, other);
  return {net.shortest_duration(req[0].from, req[0].to), net.shortest_duration(req[1].from, req[1].to),
          net.shortest_duration(req[2].from, req[2].to), net.shortest_duration(req[3].from, req[3].to),
          net.shortest_duration(req[4].from, req[4].to), net.shortest_duration(req[5].from, req[5].to)};
}

MatchEvaluation combined_cost(const Ride& r, const Ride& other, const RoadNetwork& net, RoutingLedger& ledger,
                              double max_delay_s) {
  const auto req = cross_requests(r, other);
  const auto d = batch_durations(net, req, ledger);
  return evaluate_match(r, other, CrossSegments{d[0], d[1], d[2], d[3], d[4], d[5]}, max_delay_s);
}

double matching_utility(const Ride& r, const Ride& other, const RoadNetwork& net, double max_delay_s,
                        RoutingLedger& ledger) {
  if (!(max_delay_s > 0.0)) throw std::invalid_argument("maximum pickup delay must be positive");
  return combined_cost(r, other, net, ledger, max_delay_s).utility;
}

std::vector<ScoredRide> brute_force_topk(std::span<const Ride> rides, const Ride& q, std::size_t k,
                                         const RoadNetwork& net, double max_delay_s) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::vector<ScoredRide> all;
  all.reserve(rides.size());
  for (const auto& r : rides) {
    if (r.id == q.id) continue;
    const auto eval = evaluate_match(q, r, lookup_cross_segments(q, r, net), max_delay_s);
    all.push_back({r.id, eval.utility});
  }
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), ranks_before);
  all.resize(keep);
  return all;
}

}  // namespace ridematch
