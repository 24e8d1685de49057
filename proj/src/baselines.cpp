#include "ridematch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ridematch/utility.hpp"

namespace ridematch {

namespace {

std::vector<ScoredRide> rank_by_haversine(const HaversineRide& q, std::span<const HaversineRide> pool,
                                          std::span<const std::size_t> candidates, std::size_t k,
                                          const HaversineOptions& opt) {
  std::vector<ScoredRide> scored;
  scored.reserve(candidates.size());
  for (std::size_t idx : candidates) {
    const auto& other = pool[idx];
    if (other.id == q.id) continue;
    const auto m = haversine_match(q, other, opt);
    if (m.feasible) scored.push_back({other.id, m.utility_km});
  }
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), ranks_before);
  scored.resize(keep);
  return scored;
}

std::vector<RideId> ids_of(const std::vector<ScoredRide>& v) {
  std::vector<RideId> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.id);
  return out;
}

std::vector<HaversineRide> to_haversine(std::span<const Ride> rides) {
  std::vector<HaversineRide> out;
  out.reserve(rides.size());
  for (const auto& r : rides) out.push_back(to_haversine_ride(r));
  return out;
}

}  // namespace

HaversineRide to_haversine_ride(const Ride& r) {
  return {r.id, r.pickup, r.dropoff, r.request_time, haversine_km(r.pickup, r.dropoff)};
}

HaversineMatch haversine_match(const HaversineRide& a, const HaversineRide& b, const HaversineOptions& opt) {
  const double ss = haversine_km(a.pickup, b.pickup);
  const double tt = haversine_km(a.dropoff, b.dropoff);
  const double s_t2 = haversine_km(a.pickup, b.dropoff);
  const double s2_t = haversine_km(b.pickup, a.dropoff);
  // Haversine is symmetric, so both pickup orders carry the same delay.
  const bool delay_ok = !opt.delay_proxy || ss * 1000.0 / opt.nominal_speed_mps <= opt.max_delay_s;
  HaversineMatch m;
  if (!delay_ok) return m;
  const double combined = std::min({ss + s2_t + tt, ss + b.haversine_cost_km + tt, ss + s_t2 + tt,
                                    ss + a.haversine_cost_km + tt});
  m.feasible = true;
  m.utility_km = std::max(0.0, a.haversine_cost_km + b.haversine_cost_km - combined);
  return m;
}

Proposals closeby(std::span<const Ride> rides, std::size_t k) {
  Proposals out;
  std::vector<GeoPoint> pickups;
  pickups.reserve(rides.size());
  for (const auto& r : rides) pickups.push_back(r.pickup);
  // The ball tree orders ties by position; positions follow ascending id.
  std::vector<std::size_t> order(rides.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rides[a].id < rides[b].id; });
  std::vector<GeoPoint> sorted;
  sorted.reserve(rides.size());
  for (std::size_t i : order) sorted.push_back(pickups[i]);
  const BallTree tree(std::move(sorted));
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const Ride& r = rides[order[pos]];
    auto& list = out[r.id];
    for (const auto& nb : tree.knn(r.pickup, k, pos)) list.push_back(rides[order[nb.index]].id);
  }
  return out;
}

Proposals haversine_topk(std::span<const Ride> rides, std::size_t k, const HaversineOptions& opt) {
  const auto hrides = to_haversine(rides);
  std::vector<std::size_t> all(hrides.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  Proposals out;
  for (const auto& q : hrides) out[q.id] = ids_of(rank_by_haversine(q, hrides, all, k, opt));
  return out;
}

Proposals closeby_haversine(std::span<const Ride> rides, std::size_t k, std::size_t m_candidates,
                            const HaversineOptions& opt) {
  if (m_candidates < k) throw std::invalid_argument("closeby_haversine: m_candidates must be >= k");
  const auto stage1 = closeby(rides, m_candidates);
  const auto hrides = to_haversine(rides);
  std::map<RideId, std::size_t> position;
  for (std::size_t i = 0; i < hrides.size(); ++i) position[hrides[i].id] = i;

  Proposals out;
  std::vector<std::size_t> candidates;
  for (const auto& q : hrides) {
    candidates.clear();
    for (RideId id : stage1.at(q.id)) candidates.push_back(position.at(id));
    out[q.id] = ids_of(rank_by_haversine(q, hrides, candidates, k, opt));
  }
  return out;
}

}  // namespace ridematch
