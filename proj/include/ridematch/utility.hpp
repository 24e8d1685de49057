#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ridematch/roadnet.hpp"
#include "ridematch/trips.hpp"

namespace ridematch {

/// Maximum allowed pickup delay (10 minutes).
inline constexpr double kDefaultMaxDelayS = 600.0;

/// The four ways to serve rides r and r' in one vehicle (s = pickup,
/// t = dropoff, primes belong to r').
enum class Ordering {
  ss_tt,    // <s, s', t, t'>
  ss_t_t,   // <s, s', t', t>
  s_st_t,   // <s', s, t', t>
  s_stt_,   // <s', s, t, t'>
};

inline constexpr std::array<Ordering, 4> kOrderings{Ordering::ss_tt, Ordering::ss_t_t, Ordering::s_st_t,
                                                     Ordering::s_stt_};

std::string_view to_string(Ordering o) noexcept;

/// Stop sequence of an ordering as snapped nodes.
std::array<NodeId, 4> ordering_stops(const Ride& r, const Ride& other, Ordering o) noexcept;

/// The six cross-ride segment costs; nullopt marks an unreachable segment.
struct CrossSegments {
  std::optional<double> s_to_s2;
  std::optional<double> s2_to_s;
  std::optional<double> t_to_t2;
  std::optional<double> t2_to_t;
  std::optional<double> s_to_t2;
  std::optional<double> s2_to_t;
};

/// The six cross-segment requests in CrossSegments field order.
std::array<NodePair, 6> cross_requests(const Ride& r, const Ride& other) noexcept;

struct MatchEvaluation {
  double combined_cost = 0.0;  // +inf when no ordering is feasible
  Ordering best_ordering = Ordering::ss_tt;
  bool feasible = false;
  double utility = 0.0;  // seconds saved, clamped at 0; 0 when infeasible
};

/// Pure evaluation from known segment costs. Pickup delay model: for an
/// ordering that picks up a then b, b waits duration(a_s -> b_s) and a waits
/// nothing; rides whose request times differ by more than max_delay are
/// never feasible.
MatchEvaluation evaluate_match(const Ride& r, const Ride& other, const CrossSegments& seg, double max_delay_s);

/// Fetches the six cross segments with one batch_route call (6 logical calls)
/// and evaluates the pair.
MatchEvaluation combined_cost(const Ride& r, const Ride& other, const RoadNetwork& net, RoutingLedger& ledger,
                              double max_delay_s = kDefaultMaxDelayS);

/// C(r) + C(r') - C({r, r'}) when feasible, clamped at 0; 0 otherwise.
/// Throws std::invalid_argument unless max_delay_s > 0.
double matching_utility(const Ride& r, const Ride& other, const RoadNetwork& net, double max_delay_s,
                        RoutingLedger& ledger);

/// Segment costs straight from the network, with no ledger accounting.
CrossSegments lookup_cross_segments(const Ride& r, const Ride& other, const RoadNetwork& net);

struct ScoredRide {
  RideId id = 0;
  double score = 0.0;

  friend bool operator==(const ScoredRide&, const ScoredRide&) = default;
};

/// Higher score first, then ascending id.
inline bool ranks_before(const ScoredRide& a, const ScoredRide& b) noexcept {
  return a.score != b.score ? a.score > b.score : a.id < b.id;
}

/// Exact top-k of the pool by matching utility against q (q's own id is
/// skipped). This is the recall oracle; it does not touch any ledger.
std::vector<ScoredRide> brute_force_topk(std::span<const Ride> rides, const Ride& q, std::size_t k,
                                         const RoadNetwork& net, double max_delay_s = kDefaultMaxDelayS);

}  // namespace ridematch
