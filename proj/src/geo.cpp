#include "ridematch/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace ridematch {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMetersPerDegreeLat = kEarthRadiusKm * 1000.0 * kDegToRad;

int alphabet_index(char c) {
  const auto pos = kGeohashAlphabet.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

}  // namespace

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

GeoPoint make_point(double lat, double lon) {
  GeoPoint p{lat, lon};
  if (!is_valid(p)) throw std::invalid_argument("coordinate out of range or not finite");
  return p;
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2);
  const double s2 = std::sin(dlambda / 2);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

GeoPoint offset_meters(const GeoPoint& origin, double north_m, double east_m) noexcept {
  const double lat = origin.lat + north_m / kMetersPerDegreeLat;
  const double lon = origin.lon + east_m / (kMetersPerDegreeLat * std::cos(origin.lat * kDegToRad));
  return {lat, lon};
}

CellId geohash_encode(const GeoPoint& p, int precision) {
  if (precision < 1 || precision > kMaxGeohashPrecision)
    throw std::invalid_argument("geohash precision must be in [1, 12]");
  if (!is_valid(p)) throw std::invalid_argument("invalid GeoPoint");

  double lat_lo = -90.0, lat_hi = 90.0;
  double lon_lo = -180.0, lon_hi = 180.0;
  bool lon_bit = true;
  std::string code;
  code.reserve(static_cast<std::size_t>(precision));
  for (int c = 0; c < precision; ++c) {
    int value = 0;
    for (int b = 0; b < 5; ++b) {
      double& lo = lon_bit ? lon_lo : lat_lo;
      double& hi = lon_bit ? lon_hi : lat_hi;
      const double v = lon_bit ? p.lon : p.lat;
      const double mid = (lo + hi) / 2;
      value <<= 1;
      if (v >= mid) {
        value |= 1;
        lo = mid;
      } else {
        hi = mid;
      }
      lon_bit = !lon_bit;
    }
    code.push_back(kGeohashAlphabet[static_cast<std::size_t>(value)]);
  }
  return CellId{std::move(code)};
}

GeoBox geohash_decode(const CellId& cell) {
  GeoBox box{-90.0, -180.0, 90.0, 180.0};
  bool lon_bit = true;
  for (char ch : cell.code) {
    const int value = alphabet_index(ch);
    if (value < 0) throw std::invalid_argument("character outside geohash alphabet");
    for (int b = 4; b >= 0; --b) {
      const bool bit = (value >> b) & 1;
      if (lon_bit) {
        const double mid = (box.min_lon + box.max_lon) / 2;
        (bit ? box.min_lon : box.max_lon) = mid;
      } else {
        const double mid = (box.min_lat + box.max_lat) / 2;
        (bit ? box.min_lat : box.max_lat) = mid;
      }
      lon_bit = !lon_bit;
    }
  }
  return box;
}

TimeBucket time_bucket(double epoch_seconds, double interval_seconds) {
  if (!(interval_seconds > 0.0)) throw std::invalid_argument("time interval must be positive");
  return TimeBucket{static_cast<std::int64_t>(std::floor(epoch_seconds / interval_seconds))};
}

// --- BallTree ---------------------------------------------------------------

BallTree::BallTree(std::vector<GeoPoint> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t BallTree::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;

  double lat_sum = 0.0, lon_sum = 0.0;
  double lat_min = 90.0, lat_max = -90.0, lon_min = 180.0, lon_max = -180.0;
  for (std::uint32_t i = begin; i < end; ++i) {
    const GeoPoint& p = points_[order_[i]];
    lat_sum += p.lat;
    lon_sum += p.lon;
    lat_min = std::min(lat_min, p.lat);
    lat_max = std::max(lat_max, p.lat);
    lon_min = std::min(lon_min, p.lon);
    lon_max = std::max(lon_max, p.lon);
  }
  const double count = static_cast<double>(end - begin);
  node.pivot = {lat_sum / count, lon_sum / count};
  for (std::uint32_t i = begin; i < end; ++i)
    node.radius_km = std::max(node.radius_km, haversine_km(node.pivot, points_[order_[i]]));

  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  const double lon_scale = std::cos(node.pivot.lat * kDegToRad);
  const bool split_lat = (lat_max - lat_min) >= (lon_max - lon_min) * lon_scale;
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = split_lat ? points_[a].lat : points_[a].lon;
                     const double vb = split_lat ? points_[b].lat : points_[b].lon;
                     return va != vb ? va < vb : a < b;
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::vector<BallTree::Neighbor> BallTree::knn(const GeoPoint& q, std::size_t k,
                                              std::size_t exclude) const {
  std::vector<Neighbor> result;
  if (k == 0 || nodes_.empty()) return result;

  auto worse = [](const Neighbor& a, const Neighbor& b) {
    return a.distance_km != b.distance_km ? a.distance_km < b.distance_km : a.index < b.index;
  };
  // Max-heap on (distance, index): top is the current k-th best.
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> best(worse);

  // Slack absorbs rounding in the haversine evaluation so pruning stays exact.
  constexpr double kSlackKm = 1e-9;

  auto visit = [&](auto&& self, std::int32_t node_id) -> void {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    const double lower = haversine_km(q, node.pivot) - node.radius_km;
    if (best.size() == k && lower > best.top().distance_km + kSlackKm) return;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        if (idx == exclude) continue;
        Neighbor cand{haversine_km(q, points_[idx]), idx};
        if (best.size() < k) {
          best.push(cand);
        } else if (worse(cand, best.top())) {
          best.pop();
          best.push(cand);
        }
      }
      return;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    if (haversine_km(q, l.pivot) <= haversine_km(q, r.pivot)) {
      self(self, node.left);
      self(self, node.right);
    } else {
      self(self, node.right);
      self(self, node.left);
    }
  };
  visit(visit, 0);

  result.reserve(best.size());
  while (!best.empty()) {
    result.push_back(best.top());
    best.pop();
  }
  std::reverse(result.begin(), result.end());
  return result;
}

}  // namespace ridematch
