#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ridematch {

/// Mean earth radius used for every haversine evaluation.
inline constexpr double kEarthRadiusKm = 6371.0;

inline constexpr std::string_view kGeohashAlphabet = "0123456789bcdefghjkmnpqrstuvwxyz";
inline constexpr int kMaxGeohashPrecision = 12;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Finite, lat in [-90, 90], lon in [-180, 180].
bool is_valid(const GeoPoint& p) noexcept;

/// Validating constructor; throws std::invalid_argument.
GeoPoint make_point(double lat, double lon);

/// Great-circle distance in kilometers.
double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Point reached by moving north_m / east_m meters from origin on a local
/// equirectangular tangent plane.
GeoPoint offset_meters(const GeoPoint& origin, double north_m, double east_m) noexcept;

struct GeoBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;

  bool contains(const GeoPoint& p) const noexcept {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
  GeoPoint center() const noexcept { return {(min_lat + max_lat) / 2, (min_lon + max_lon) / 2}; }
};

/// Geohash cell: base-32 string over kGeohashAlphabet.
struct CellId {
  std::string code;

  friend bool operator==(const CellId&, const CellId&) = default;
  friend auto operator<=>(const CellId&, const CellId&) = default;
};

/// Standard geohash (longitude bit first, bits interleaved, base-32).
/// precision must be in [1, 12]; throws std::invalid_argument otherwise.
CellId geohash_encode(const GeoPoint& p, int precision);

/// Bounding box of a cell. Throws std::invalid_argument on characters
/// outside the alphabet.
GeoBox geohash_decode(const CellId& cell);

struct TimeBucket {
  std::int64_t index = 0;

  friend bool operator==(const TimeBucket&, const TimeBucket&) = default;
  friend auto operator<=>(const TimeBucket&, const TimeBucket&) = default;
};

/// floor(epoch_seconds / interval_seconds); boundaries aligned to epoch 0.
TimeBucket time_bucket(double epoch_seconds, double interval_seconds);

/// Exact k-nearest-neighbour search under the haversine metric. Nodes carry
/// a centroid pivot and a covering radius, so the triangle inequality gives
/// the pruning bound.
class BallTree {
 public:
  struct Neighbor {
    double distance_km;
    std::size_t index;
  };

  explicit BallTree(std::vector<GeoPoint> points, std::size_t leaf_size = 16);

  std::size_t size() const noexcept { return points_.size(); }
  const GeoPoint& point(std::size_t i) const { return points_[i]; }

  /// The k nearest points to q ordered by (distance, index). Points whose
  /// index equals `exclude` are skipped.
  std::vector<Neighbor> knn(const GeoPoint& q, std::size_t k,
                            std::size_t exclude = static_cast<std::size_t>(-1)) const;

 private:
  struct Node {
    GeoPoint pivot;
    double radius_km = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<GeoPoint> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace ridematch
