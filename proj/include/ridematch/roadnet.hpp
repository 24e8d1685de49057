#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ridematch/geo.hpp"

namespace ridematch {

using NodeId = std::uint32_t;

struct DirectedEdge {
  NodeId from = 0;
  NodeId to = 0;
  double duration_s = 0.0;
  double length_m = 0.0;
};

struct Route {
  std::vector<NodeId> nodes;
  std::vector<GeoPoint> points;
  std::vector<double> segment_durations;
  double total_duration = 0.0;
};

/// Per-source shortest path tree.
struct ShortestPathTree {
  std::vector<double> duration;  // +inf when unreachable
  std::vector<NodeId> parent;    // parent[source] == source
  std::vector<std::uint32_t> parent_edge;  // index into RoadNetwork::edges()
};

/// Immutable directed road graph with haversine snapping. Shortest path
/// trees are memoized per source; the memo is internally synchronized, so a
/// const network may be queried from several threads.
class RoadNetwork {
 public:
  static constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

  /// Throws std::invalid_argument on bad node ids, non-positive durations or
  /// invalid coordinates.
  RoadNetwork(std::vector<GeoPoint> nodes, std::vector<DirectedEdge> edges);

  std::size_t node_count() const noexcept { return points_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const GeoPoint& point(NodeId n) const { return points_.at(n); }
  std::span<const DirectedEdge> edges() const noexcept { return edges_; }
  std::span<const DirectedEdge> out_edges(NodeId n) const;

  /// Nearest node by haversine distance, ties to the lower id.
  NodeId snap(const GeoPoint& p) const;

  /// Duration of the minimum-duration path, nullopt when unreachable.
  std::optional<double> shortest_duration(NodeId from, NodeId to) const;

  /// Minimum-duration path. Throws NoRouteError when unreachable.
  Route shortest_route(NodeId from, NodeId to) const;

  const ShortestPathTree& tree(NodeId source) const;

  /// Number of cached shortest path trees.
  std::size_t cached_trees() const;

 private:
  struct Cache;

  std::vector<GeoPoint> points_;
  std::vector<DirectedEdge> edges_;      // sorted by (from, to)
  std::vector<std::uint32_t> offsets_;  // CSR row offsets into edges_
  std::shared_ptr<const BallTree> snapper_;
  std::shared_ptr<Cache> cache_;
};

/// Single-source Dijkstra over arbitrary per-edge weights (indexed like
/// RoadNetwork::edges()). Ties are resolved by lower node id, and a parent is
/// only replaced on strict improvement, so the tree is deterministic.
ShortestPathTree dijkstra(const RoadNetwork& net, NodeId source, std::span<const double> weights);

struct GridOptions {
  GeoPoint origin{40.7484, -73.9857};
  double min_speed_mps = 6.0;
  double max_speed_mps = 14.0;
};

/// Manhattan grid city: rows x cols nodes, spacing_m apart, bidirectional
/// edges with a per-direction speed drawn uniformly in [6, 14] m/s. Edge
/// durations are rounded to whole seconds (at least 1 s). Throws
/// std::invalid_argument when rows or cols < 2.
RoadNetwork build_grid_network(int rows, int cols, double spacing_m, std::uint64_t speed_jitter_seed,
                               const GridOptions& options = {});

/// {nodes:[{id,lat,lon}], edges:[{u,v,duration_s,length_m}]}. Node ids must
/// be dense 0..N-1 in any order. Throws FormatError.
RoadNetwork load_network_json(std::istream& in);
RoadNetwork load_network_json(const std::filesystem::path& path);

/// Minimum-duration route first, then alternates found by repeatedly
/// multiplying the durations of already-used edges by 1.5 and re-solving.
/// An alternate is kept when its true duration is within 1.2x of the
/// optimum and its edge set differs from every kept route. Sorted by
/// duration. Throws NoRouteError when unreachable, std::invalid_argument
/// when alternates < 1.
std::vector<Route> route(const RoadNetwork& net, const GeoPoint& from, const GeoPoint& to,
                         int alternates = 1);
std::vector<Route> route_nodes(const RoadNetwork& net, NodeId from, NodeId to, int alternates = 1);

inline constexpr std::size_t kRoutingBatchSize = 100;
inline constexpr double kRoutingBatchLatencyMs = 10.0;

struct LedgerSnapshot {
  std::uint64_t call_count = 0;
  std::uint64_t batch_count = 0;
  double simulated_latency_ms = 0.0;

  friend bool operator==(const LedgerSnapshot&, const LedgerSnapshot&) = default;
};

/// Logical routing-service accounting: every request is one call, requests
/// are grouped in batches of at most 100 and each batch costs 10 ms.
/// Thread-safe; concurrent recorders never lose counts.
class RoutingLedger {
 public:
  RoutingLedger() = default;
  RoutingLedger(const RoutingLedger&) = delete;
  RoutingLedger& operator=(const RoutingLedger&) = delete;

  /// Account for one batch_route invocation carrying `requests` requests.
  void record(std::size_t requests) noexcept;

  std::uint64_t call_count() const noexcept { return calls_.load(); }
  std::uint64_t batch_count() const noexcept { return batches_.load(); }
  double simulated_latency_ms() const noexcept {
    return static_cast<double>(batch_count()) * kRoutingBatchLatencyMs;
  }
  LedgerSnapshot snapshot() const noexcept {
    return {call_count(), batch_count(), simulated_latency_ms()};
  }

 private:
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> batches_{0};
};

struct RouteRequest {
  GeoPoint from;
  GeoPoint to;
};

struct NodePair {
  NodeId from = 0;
  NodeId to = 0;
};

/// Route every request. Each element holds 1..alternates routes, or is empty
/// when the pair is unreachable.
std::vector<std::vector<Route>> batch_route(const RoadNetwork& net, std::span<const RouteRequest> requests,
                                            RoutingLedger& ledger, int alternates = 1);

/// Duration-only variant over already snapped nodes; same accounting.
std::vector<std::optional<double>> batch_durations(const RoadNetwork& net, std::span<const NodePair> requests,
                                                   RoutingLedger& ledger);

}  // namespace ridematch
