#include "ridematch/roadnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ridematch/errors.hpp"
#include "ridematch/random.hpp"

namespace ridematch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kNoEdge = std::numeric_limits<std::uint32_t>::max();
constexpr double kAlternatePenalty = 1.5;
constexpr double kAlternateStretch = 1.2;

Route trace(const RoadNetwork& net, const ShortestPathTree& tree, NodeId from, NodeId to) {
  Route r;
  for (NodeId v = to; v != from; v = tree.parent[v]) r.nodes.push_back(v);
  r.nodes.push_back(from);
  std::reverse(r.nodes.begin(), r.nodes.end());

  const auto edges = net.edges();
  r.points.reserve(r.nodes.size());
  for (NodeId v : r.nodes) r.points.push_back(net.point(v));
  for (std::size_t i = 1; i < r.nodes.size(); ++i) {
    const double d = edges[tree.parent_edge[r.nodes[i]]].duration_s;
    r.segment_durations.push_back(d);
    r.total_duration += d;
  }
  return r;
}

std::vector<std::uint32_t> edge_indices(const ShortestPathTree& tree, const Route& r) {
  std::vector<std::uint32_t> out;
  out.reserve(r.nodes.size());
  for (std::size_t i = 1; i < r.nodes.size(); ++i) out.push_back(tree.parent_edge[r.nodes[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

struct RoadNetwork::Cache {
  std::mutex mutex;
  std::vector<std::unique_ptr<ShortestPathTree>> trees;
  std::vector<double> durations;
};

RoadNetwork::RoadNetwork(std::vector<GeoPoint> nodes, std::vector<DirectedEdge> edges)
    : points_(std::move(nodes)), edges_(std::move(edges)), cache_(std::make_shared<Cache>()) {
  if (points_.empty()) throw std::invalid_argument("road network has no nodes");
  for (const auto& p : points_)
    if (!is_valid(p)) throw std::invalid_argument("road network node has invalid coordinates");
  for (const auto& e : edges_) {
    if (e.from >= points_.size() || e.to >= points_.size())
      throw std::invalid_argument("road network edge references unknown node");
    if (!(e.duration_s > 0.0) || !std::isfinite(e.duration_s))
      throw std::invalid_argument("road network edge duration must be positive");
  }
  std::stable_sort(edges_.begin(), edges_.end(), [](const DirectedEdge& a, const DirectedEdge& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });
  offsets_.assign(points_.size() + 1, 0);
  for (const auto& e : edges_) ++offsets_[e.from + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];

  snapper_ = std::make_shared<const BallTree>(points_);
  cache_->trees.resize(points_.size());
  cache_->durations.reserve(edges_.size());
  for (const auto& e : edges_) cache_->durations.push_back(e.duration_s);
}

std::span<const DirectedEdge> RoadNetwork::out_edges(NodeId n) const {
  if (n >= points_.size()) throw std::out_of_range("node id out of range");
  return std::span<const DirectedEdge>(edges_).subspan(offsets_[n], offsets_[n + 1] - offsets_[n]);
}

NodeId RoadNetwork::snap(const GeoPoint& p) const {
  const auto nn = snapper_->knn(p, 1);
  return static_cast<NodeId>(nn.front().index);
}

const ShortestPathTree& RoadNetwork::tree(NodeId source) const {
  if (source >= points_.size()) throw std::out_of_range("node id out of range");
  {
    std::lock_guard lock(cache_->mutex);
    if (cache_->trees[source]) return *cache_->trees[source];
  }
  auto computed = std::make_unique<ShortestPathTree>(dijkstra(*this, source, cache_->durations));
  std::lock_guard lock(cache_->mutex);
  if (!cache_->trees[source]) cache_->trees[source] = std::move(computed);
  return *cache_->trees[source];
}

std::size_t RoadNetwork::cached_trees() const {
  std::lock_guard lock(cache_->mutex);
  return static_cast<std::size_t>(
      std::count_if(cache_->trees.begin(), cache_->trees.end(), [](const auto& t) { return t != nullptr; }));
}

std::optional<double> RoadNetwork::shortest_duration(NodeId from, NodeId to) const {
  const double d = tree(from).duration.at(to);
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

Route RoadNetwork::shortest_route(NodeId from, NodeId to) const {
  const auto& t = tree(from);
  if (!std::isfinite(t.duration.at(to))) throw NoRouteError("no route between nodes");
  return trace(*this, t, from, to);
}

ShortestPathTree dijkstra(const RoadNetwork& net, NodeId source, std::span<const double> weights) {
  const std::size_t n = net.node_count();
  const auto edges = net.edges();
  ShortestPathTree t;
  t.duration.assign(n, kInf);
  t.parent.assign(n, RoadNetwork::kNoNode);
  t.parent_edge.assign(n, kNoEdge);
  t.duration[source] = 0.0;
  t.parent[source] = source;

  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  heap.push({0.0, source});
  std::vector<char> done(n, 0);
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (done[u]) continue;
    done[u] = 1;
    const auto out = net.out_edges(u);
    const auto base = static_cast<std::uint32_t>(out.data() - edges.data());
    for (std::uint32_t i = 0; i < out.size(); ++i) {
      const DirectedEdge& e = out[i];
      const double nd = d + weights[base + i];
      if (nd < t.duration[e.to]) {
        t.duration[e.to] = nd;
        t.parent[e.to] = u;
        t.parent_edge[e.to] = base + i;
        heap.push({nd, e.to});
      }
    }
  }
  return t;
}

RoadNetwork build_grid_network(int rows, int cols, double spacing_m, std::uint64_t speed_jitter_seed,
                               const GridOptions& options) {
  if (rows < 2 || cols < 2) throw std::invalid_argument("grid needs at least 2 rows and 2 columns");
  if (!(spacing_m > 0.0)) throw std::invalid_argument("grid spacing must be positive");

  std::vector<GeoPoint> nodes;
  nodes.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) nodes.push_back(offset_meters(options.origin, r * spacing_m, c * spacing_m));

  Rng rng(speed_jitter_seed);
  std::vector<DirectedEdge> edges;
  auto id = [cols](int r, int c) { return static_cast<NodeId>(r * cols + c); };
  auto add = [&](NodeId a, NodeId b) {
    const double speed = rng.uniform(options.min_speed_mps, options.max_speed_mps);
    const double duration = std::max(1.0, std::round(spacing_m / speed));
    edges.push_back({a, b, duration, spacing_m});
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        add(id(r, c), id(r, c + 1));
        add(id(r, c + 1), id(r, c));
      }
      if (r + 1 < rows) {
        add(id(r, c), id(r + 1, c));
        add(id(r + 1, c), id(r, c));
      }
    }
  }
  return RoadNetwork(std::move(nodes), std::move(edges));
}

RoadNetwork load_network_json(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("network JSON parse error: ") + e.what());
  }
  try {
    const auto& jnodes = doc.at("nodes");
    std::vector<GeoPoint> nodes(jnodes.size());
    std::vector<char> seen(jnodes.size(), 0);
    for (const auto& jn : jnodes) {
      const auto id = jn.at("id").get<std::int64_t>();
      if (id < 0 || static_cast<std::size_t>(id) >= nodes.size() || seen[static_cast<std::size_t>(id)])
        throw FormatError("network node ids must be unique and dense in [0, N)");
      seen[static_cast<std::size_t>(id)] = 1;
      nodes[static_cast<std::size_t>(id)] = GeoPoint{jn.at("lat").get<double>(), jn.at("lon").get<double>()};
    }
    std::vector<DirectedEdge> edges;
    for (const auto& je : doc.at("edges")) {
      edges.push_back({je.at("u").get<NodeId>(), je.at("v").get<NodeId>(), je.at("duration_s").get<double>(),
                       je.value("length_m", 0.0)});
    }
    return RoadNetwork(std::move(nodes), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("network JSON schema error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("network JSON rejected: ") + e.what());
  }
}

RoadNetwork load_network_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open network file " + path.string());
  return load_network_json(in);
}

std::vector<Route> route_nodes(const RoadNetwork& net, NodeId from, NodeId to, int alternates) {
  if (alternates < 1) throw std::invalid_argument("alternates must be >= 1");
  const auto& best_tree = net.tree(from);
  if (!std::isfinite(best_tree.duration.at(to))) throw NoRouteError("no route between snapped nodes");

  std::vector<Route> routes{trace(net, best_tree, from, to)};
  if (from == to || alternates == 1) return routes;

  const double limit = kAlternateStretch * routes.front().total_duration;
  std::vector<std::vector<std::uint32_t>> used{edge_indices(best_tree, routes.front())};
  std::vector<double> weights;
  weights.reserve(net.edge_count());
  for (const auto& e : net.edges()) weights.push_back(e.duration_s);

  const int max_rounds = 3 * (alternates - 1);
  for (int round = 0; round < max_rounds && static_cast<int>(routes.size()) < alternates; ++round) {
    for (std::uint32_t e : used.back()) weights[e] *= kAlternatePenalty;
    const auto t = dijkstra(net, from, weights);
    Route candidate = trace(net, t, from, to);
    auto cand_edges = edge_indices(t, candidate);
    const bool distinct = std::find(used.begin(), used.end(), cand_edges) == used.end();
    if (distinct && candidate.total_duration <= limit) routes.push_back(std::move(candidate));
    used.push_back(std::move(cand_edges));
  }
  std::stable_sort(routes.begin(), routes.end(),
                   [](const Route& a, const Route& b) { return a.total_duration < b.total_duration; });
  return routes;
}

std::vector<Route> route(const RoadNetwork& net, const GeoPoint& from, const GeoPoint& to, int alternates) {
  return route_nodes(net, net.snap(from), net.snap(to), alternates);
}

void RoutingLedger::record(std::size_t requests) noexcept {
  if (requests == 0) return;
  calls_.fetch_add(requests);
  batches_.fetch_add((requests + kRoutingBatchSize - 1) / kRoutingBatchSize);
}

std::vector<std::vector<Route>> batch_route(const RoadNetwork& net, std::span<const RouteRequest> requests,
                                            RoutingLedger& ledger, int alternates) {
  ledger.record(requests.size());
  std::vector<std::vector<Route>> out;
  out.reserve(requests.size());
  for (const auto& req : requests) {
    try {
      out.push_back(route(net, req.from, req.to, alternates));
    } catch (const NoRouteError&) {
      out.emplace_back();
    }
  }
  return out;
}

std::vector<std::optional<double>> batch_durations(const RoadNetwork& net, std::span<const NodePair> requests,
                                                   RoutingLedger& ledger) {
  ledger.record(requests.size());
  std::vector<std::optional<double>> out;
  out.reserve(requests.size());
  for (const auto& req : requests) out.push_back(net.shortest_duration(req.from, req.to));
  return out;
}

}  // namespace ridematch
