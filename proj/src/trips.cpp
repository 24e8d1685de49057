#include "ridematch/trips.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "ridematch/errors.hpp"
#include "ridematch/random.hpp"

namespace ridematch {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  // from_chars for double is available in libstdc++ 11.
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

template <typename T>
T parse_int(std::string_view s, std::size_t pos, std::size_t len) {
  T v{};
  const auto sub = s.substr(pos, len);
  const auto [ptr, ec] = std::from_chars(sub.data(), sub.data() + sub.size(), v);
  if (ec != std::errc{} || ptr != sub.data() + sub.size()) throw std::invalid_argument("bad datetime field");
  return v;
}

std::vector<Ride> route_rides(const RoadNetwork& net, std::vector<Ride> rides, RoutingLedger& ledger,
                              int alternates) {
  std::vector<RouteRequest> requests;
  requests.reserve(rides.size());
  for (const auto& r : rides) requests.push_back({r.pickup, r.dropoff});
  auto routed = batch_route(net, requests, ledger, alternates);
  std::vector<Ride> kept;
  kept.reserve(rides.size());
  for (std::size_t i = 0; i < rides.size(); ++i) {
    if (routed[i].empty()) continue;
    Ride r = std::move(rides[i]);
    r.routes = std::move(routed[i]);
    r.cost = r.routes.front().total_duration;
    kept.push_back(std::move(r));
  }
  return kept;
}

}  // namespace

double Workload::total_cost() const noexcept {
  double total = 0.0;
  for (const auto& r : rides) total += r.cost;
  return total;
}

std::int64_t parse_local_datetime(const std::string& text, std::int64_t utc_offset_s) {
  const std::string_view s = trim(text);
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' ||
      s[16] != ':')
    throw std::invalid_argument("datetime must be YYYY-MM-DD HH:MM:SS");
  using namespace std::chrono;
  const year_month_day ymd{year{parse_int<int>(s, 0, 4)}, month{parse_int<unsigned>(s, 5, 2)},
                           day{parse_int<unsigned>(s, 8, 2)}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  const int hh = parse_int<int>(s, 11, 2);
  const int mm = parse_int<int>(s, 14, 2);
  const int ss = parse_int<int>(s, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) throw std::invalid_argument("invalid time of day");
  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  return days * 86400 + hh * 3600 + mm * 60 + ss - utc_offset_s;
}

std::string format_local_datetime(std::int64_t epoch_seconds, std::int64_t utc_offset_s) {
  using namespace std::chrono;
  const std::int64_t local = epoch_seconds + utc_offset_s;
  std::int64_t days = local / 86400;
  std::int64_t rem = local % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

Workload load_trips_csv(std::istream& in, const TripFilter& filter, const RoadNetwork& net, RoutingLedger& ledger) {
  Workload w;
  w.label = "csv";
  w.window_start = filter.window_start;
  w.window_end = filter.window_end;

  std::string line;
  if (!std::getline(in, line)) throw FormatError("trip CSV is empty (no header)");
  const auto header = split_csv(line);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(std::string(trim(header[i])), i);
  std::size_t col[5];
  for (std::size_t c = 0; c < 5; ++c) {
    const auto it = index.find(kTripCsvColumns[c]);
    if (it == index.end()) throw FormatError(std::string("trip CSV missing required column: ") + kTripCsvColumns[c]);
    col[c] = it->second;
  }
  const std::size_t needed = *std::max_element(std::begin(col), std::end(col)) + 1;

  std::vector<Ride> pending;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() < needed) {
      ++w.skipped_rows;
      continue;
    }
    double plon, plat, dlon, dlat;
    std::int64_t t;
    try {
      t = parse_local_datetime(std::string(fields[col[0]]), filter.utc_offset_s);
    } catch (const std::invalid_argument&) {
      ++w.skipped_rows;
      continue;
    }
    if (!parse_double(fields[col[1]], plon) || !parse_double(fields[col[2]], plat) ||
        !parse_double(fields[col[3]], dlon) || !parse_double(fields[col[4]], dlat)) {
      ++w.skipped_rows;
      continue;
    }
    const GeoPoint pickup{plat, plon};
    const GeoPoint dropoff{dlat, dlon};
    const bool zero = plat == 0.0 || plon == 0.0 || dlat == 0.0 || dlon == 0.0;
    if (zero || !is_valid(pickup) || !is_valid(dropoff) || !filter.bbox.contains(pickup) ||
        !filter.bbox.contains(dropoff) || t < filter.window_start || t >= filter.window_end) {
      ++w.dropped_rows;
      continue;
    }
    Ride r;
    r.pickup = pickup;
    r.dropoff = dropoff;
    r.pickup_node = net.snap(pickup);
    r.dropoff_node = net.snap(dropoff);
    r.request_time = t;
    if (r.pickup_node == r.dropoff_node) {
      ++w.dropped_rows;
      continue;
    }
    pending.push_back(r);
  }

  const std::size_t before = pending.size();
  w.rides = route_rides(net, std::move(pending), ledger, filter.alternates);
  w.dropped_rows += before - w.rides.size();
  for (std::size_t i = 0; i < w.rides.size(); ++i) w.rides[i].id = static_cast<RideId>(i);
  return w;
}

Workload load_trips_csv(const std::filesystem::path& path, const TripFilter& filter, const RoadNetwork& net,
                        RoutingLedger& ledger) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open trip CSV " + path.string());
  return load_trips_csv(in, filter, net, ledger);
}

void write_trips_csv(const Workload& w, std::ostream& out, std::int64_t utc_offset_s) {
  out << "tpep_pickup_datetime,pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude\n";
  char buf[160];
  for (const auto& r : w.rides) {
    std::snprintf(buf, sizeof buf, "%s,%.7f,%.7f,%.7f,%.7f\n",
                  format_local_datetime(r.request_time, utc_offset_s).c_str(), r.pickup.lon, r.pickup.lat,
                  r.dropoff.lon, r.dropoff.lat);
    out << buf;
  }
}

CommuteMode parse_commute_mode(const std::string& s) {
  if (s == "morning") return CommuteMode::morning;
  if (s == "evening") return CommuteMode::evening;
  throw std::invalid_argument("commute mode must be morning or evening, got '" + s + "'");
}

std::string to_string(CommuteMode m) { return m == CommuteMode::morning ? "morning" : "evening"; }

Workload synth_commute(const RoadNetwork& net, const CommuteSpec& spec, RoutingLedger& ledger) {
  if (spec.n < 1) throw std::invalid_argument("synth_commute needs n >= 1");
  if (spec.hotspot_count < 1) throw std::invalid_argument("synth_commute needs at least one hotspot");
  if (spec.window_end <= spec.window_start) throw std::invalid_argument("synth_commute window is empty");

  GeoBox box{90.0, 180.0, -90.0, -180.0};
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const auto& p = net.point(static_cast<NodeId>(i));
    box.min_lat = std::min(box.min_lat, p.lat);
    box.max_lat = std::max(box.max_lat, p.lat);
    box.min_lon = std::min(box.min_lon, p.lon);
    box.max_lon = std::max(box.max_lon, p.lon);
  }
  const GeoPoint core = box.center();

  // Residential candidates: nodes in the outer half of the box (Chebyshev
  // distance from the centre in normalized coordinates).
  std::vector<NodeId> outer;
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    const auto& p = net.point(static_cast<NodeId>(i));
    const double u = box.max_lat > box.min_lat ? std::abs(p.lat - core.lat) / (box.max_lat - box.min_lat) : 0.0;
    const double v = box.max_lon > box.min_lon ? std::abs(p.lon - core.lon) / (box.max_lon - box.min_lon) : 0.0;
    if (std::max(u, v) >= 0.25) outer.push_back(static_cast<NodeId>(i));
  }
  if (outer.empty())
    for (std::size_t i = 0; i < net.node_count(); ++i) outer.push_back(static_cast<NodeId>(i));

  Rng rng(spec.seed);
  std::vector<GeoPoint> hotspots;
  for (std::size_t h = 0; h < spec.hotspot_count; ++h) hotspots.push_back(net.point(outer[rng.index(outer.size())]));

  const auto window = static_cast<std::uint64_t>(spec.window_end - spec.window_start);
  std::vector<Ride> rides;
  rides.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const GeoPoint& home = hotspots[rng.index(hotspots.size())];
    const auto t = spec.window_start + static_cast<std::int64_t>(rng.index(window));
    Ride r;
    r.request_time = t;
    for (int attempt = 0;; ++attempt) {
      const GeoPoint residential = offset_meters(home, rng.normal() * spec.spread_m, rng.normal() * spec.spread_m);
      const GeoPoint downtown =
          offset_meters(core, rng.normal() * spec.core_spread_m, rng.normal() * spec.core_spread_m);
      const bool morning = spec.mode == CommuteMode::morning;
      r.pickup = morning ? residential : downtown;
      r.dropoff = morning ? downtown : residential;
      r.pickup_node = net.snap(r.pickup);
      r.dropoff_node = net.snap(r.dropoff);
      if (r.pickup_node != r.dropoff_node) break;
      if (attempt > 1000) throw std::invalid_argument("synth_commute cannot separate pickup and dropoff");
    }
    rides.push_back(std::move(r));
  }

  Workload w;
  w.label = to_string(spec.mode);
  w.window_start = spec.window_start;
  w.window_end = spec.window_end;
  w.rides = route_rides(net, std::move(rides), ledger, spec.alternates);
  if (w.rides.size() != spec.n) throw NoRouteError("synthetic ride has no route; network is not connected");
  for (std::size_t i = 0; i < w.rides.size(); ++i) w.rides[i].id = static_cast<RideId>(i);
  return w;
}

Workload subsample(const Workload& w, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("subsample rate must be in (0, 1]");
  const std::size_t n = w.rides.size();
  const auto target = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 0.5));

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  // Partial Fisher-Yates: the first `target` slots are the sample.
  for (std::size_t i = 0; i < target && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(std::min(target, n));
  std::sort(idx.begin(), idx.end());

  Workload out;
  out.label = w.label;
  out.load_fraction = w.load_fraction * rate;
  out.window_start = w.window_start;
  out.window_end = w.window_end;
  out.rides.reserve(idx.size());
  for (std::size_t i : idx) out.rides.push_back(w.rides[i]);
  return out;
}

}  // namespace ridematch
