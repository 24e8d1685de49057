#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "ridematch/trips.hpp"

namespace ridematch {

/// Candidate lists per ride (the output of any search approach).
using Proposals = std::map<RideId, std::vector<RideId>>;

inline constexpr std::size_t kDefaultCandidatePool = 1000;
inline constexpr double kDefaultNominalSpeedMps = 8.0;

struct HaversineRide {
  RideId id = 0;
  GeoPoint pickup;
  GeoPoint dropoff;
  std::int64_t request_time = 0;
  double haversine_cost_km = 0.0;
};

HaversineRide to_haversine_ride(const Ride& r);

struct HaversineOptions {
  double max_delay_s = 600.0;
  double nominal_speed_mps = kDefaultNominalSpeedMps;
  bool delay_proxy = true;  // false: ignore feasibility entirely
};

struct HaversineMatch {
  bool feasible = false;
  double utility_km = 0.0;
};

/// Pairwise utility of the four serving orderings with haversine segment
/// costs. Feasibility proxy: the second pickup waits
/// haversine(first pickup, second pickup) / nominal speed.
HaversineMatch haversine_match(const HaversineRide& a, const HaversineRide& b, const HaversineOptions& opt);

/// k nearest rides by pickup haversine distance (ball tree), self excluded,
/// ties by ascending id.
Proposals closeby(std::span<const Ride> rides, std::size_t k);

/// Exhaustive top-k by haversine matching utility over proxy-feasible pairs,
/// ties by ascending id.
Proposals haversine_topk(std::span<const Ride> rides, std::size_t k, const HaversineOptions& opt = {});

/// closeby with m_candidates, then the top-k of those by haversine utility.
/// Throws std::invalid_argument when m_candidates < k.
Proposals closeby_haversine(std::span<const Ride> rides, std::size_t k,
                            std::size_t m_candidates = kDefaultCandidatePool, const HaversineOptions& opt = {});

}  // namespace ridematch
