#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ridematch/geo.hpp"
#include "ridematch/roadnet.hpp"

namespace ridematch {

using RideId = std::uint32_t;

/// A trip request with its cached route(s). cost == routes[0].total_duration.
struct Ride {
  RideId id = 0;
  GeoPoint pickup;
  GeoPoint dropoff;
  NodeId pickup_node = 0;
  NodeId dropoff_node = 0;
  std::int64_t request_time = 0;
  std::vector<Route> routes;  // ascending duration, at least one
  double cost = 0.0;
};

struct Workload {
  std::vector<Ride> rides;
  std::string label;
  double load_fraction = 1.0;
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  std::size_t skipped_rows = 0;  // unparsable
  std::size_t dropped_rows = 0;  // filtered out by bbox/window/coordinate rules

  double total_cost() const noexcept;
};

struct TripFilter {
  GeoBox bbox;
  std::int64_t window_start = 0;  // inclusive, epoch seconds
  std::int64_t window_end = 0;    // exclusive
  std::int64_t utc_offset_s = 0;  // local wall time = UTC + offset
  int alternates = 1;
};

/// Columns required in the NY yellow-taxi schema.
inline constexpr const char* kTripCsvColumns[] = {"tpep_pickup_datetime", "pickup_longitude", "pickup_latitude",
                                                  "dropoff_longitude", "dropoff_latitude"};

/// "YYYY-MM-DD HH:MM:SS" local wall time to epoch seconds. Throws
/// std::invalid_argument on malformed input.
std::int64_t parse_local_datetime(const std::string& text, std::int64_t utc_offset_s);
std::string format_local_datetime(std::int64_t epoch_seconds, std::int64_t utc_offset_s);

/// Read taxi trips, keep rows inside bbox and window with non-zero valid
/// coordinates and distinct snapped endpoints, and route every kept ride
/// with one batch_route request. Throws FormatError naming a missing column.
Workload load_trips_csv(std::istream& in, const TripFilter& filter, const RoadNetwork& net, RoutingLedger& ledger);
Workload load_trips_csv(const std::filesystem::path& path, const TripFilter& filter, const RoadNetwork& net,
                        RoutingLedger& ledger);

/// Write rides in the taxi schema (only the required columns).
void write_trips_csv(const Workload& w, std::ostream& out, std::int64_t utc_offset_s);

enum class CommuteMode { morning, evening };

CommuteMode parse_commute_mode(const std::string& s);
std::string to_string(CommuteMode m);

struct CommuteSpec {
  CommuteMode mode = CommuteMode::morning;
  std::size_t n = 100;
  std::size_t hotspot_count = 6;
  double spread_m = 75.0;        // jitter around residential hotspots
  double core_spread_m = 125.0;  // jitter around the downtown core
  std::int64_t window_start = 1465372800;  // 2016-06-08 08:00 UTC
  std::int64_t window_end = 1465376400;
  std::uint64_t seed = 1;
  int alternates = 1;
};

/// Synthetic commute pool. Residential hotspots are drawn from the outer
/// part of the network bounding box and the downtown core sits at its
/// centre. Morning rides go hotspot -> core, evening rides core -> hotspot;
/// hotspots, request times and jitter come from the same seeded stream for
/// both modes, so switching mode swaps the pickup and dropoff clusters.
/// Throws std::invalid_argument when n < 1.
Workload synth_commute(const RoadNetwork& net, const CommuteSpec& spec, RoutingLedger& ledger);

/// Uniform sample without replacement of round_half_up(rate * n) rides,
/// returned in original order. Throws std::invalid_argument unless
/// 0 < rate <= 1.
Workload subsample(const Workload& w, double rate, std::uint64_t seed);

}  // namespace ridematch
