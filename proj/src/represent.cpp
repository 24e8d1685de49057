#include "ridematch/represent.hpp"

#include <algorithm>

#include "ridematch/random.hpp"

namespace ridematch {

namespace {

std::uint64_t node_key(const SpaceTimeNode& n) noexcept {
  return hash_combine(hash_string(n.cell.code), static_cast<std::uint64_t>(n.bucket.index));
}

}  // namespace

std::uint64_t edge_key(const SpaceTimeEdge& e) noexcept {
  return hash_combine(node_key(e.from), node_key(e.to));
}

void SparseVector::add(const SpaceTimeEdge& key, double value) {
  if (value == 0.0) return;
  auto [it, inserted] = entries_.try_emplace(key, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0.0) entries_.erase(it);
  }
}

double SparseVector::norm() const noexcept {
  double sq = 0.0;
  for (const auto& [k, v] : entries_) sq += v * v;
  return std::sqrt(sq);
}

void SparseVector::scale(double factor) {
  if (factor == 0.0) {
    entries_.clear();
    return;
  }
  for (auto& [k, v] : entries_) v *= factor;
}

double dot(const SparseVector& a, const SparseVector& b) noexcept {
  double sum = 0.0;
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  while (ia != a.entries().end() && ib != b.entries().end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

SpaceTimeEdgeSet st_edge_set(const Route& route, double request_time, int space_precision,
                             double time_interval_s) {
  if (route.points.empty()) throw std::invalid_argument("st_edge_set: empty route");
  if (route.segment_durations.size() + 1 != route.points.size())
    throw std::invalid_argument("st_edge_set: route segments do not match points");

  SpaceTimeEdgeSet edges;
  double arrival = request_time;
  SpaceTimeNode current{geohash_encode(route.points.front(), space_precision),
                        time_bucket(arrival, time_interval_s)};
  double pending = 0.0;
  for (std::size_t i = 1; i < route.points.size(); ++i) {
    arrival += route.segment_durations[i - 1];
    pending += route.segment_durations[i - 1];
    SpaceTimeNode next{geohash_encode(route.points[i], space_precision), time_bucket(arrival, time_interval_s)};
    if (next == current) continue;
    edges[SpaceTimeEdge{current, next}] += pending;
    pending = 0.0;
    current = std::move(next);
  }
  return edges;
}

SparseVector preprocessing_vector(const SpaceTimeEdgeSet& s) {
  SparseVector v;
  for (const auto& [edge, cost] : s) v.add(edge, cost);
  return v;
}

SparseVector query_vector(const SpaceTimeEdgeSet& s) {
  SparseVector v;
  for (const auto& [edge, cost] : s) v.add(edge, 1.0);
  return v;
}

double intersection_cost(const SpaceTimeEdgeSet& costs, const SpaceTimeEdgeSet& other) {
  double total = 0.0;
  for (const auto& [edge, cost] : costs)
    if (other.contains(edge)) total += cost;
  return total;
}

Normalized normalize_dataset(std::span<SparseVector> vectors, double U) {
  double max_norm = 0.0;
  for (const auto& v : vectors) max_norm = std::max(max_norm, v.norm());
  if (!(max_norm > 0.0)) throw DegenerateInputError("normalize_dataset: every vector is zero");
  const double scale = U / max_norm;
  for (auto& v : vectors) v.scale(scale);
  return {scale};
}

Normalized normalize_dataset(std::span<DenseVector> vectors, double U) {
  double max_norm = 0.0;
  for (const auto& v : vectors) max_norm = std::max(max_norm, v.norm());
  if (!(max_norm > 0.0)) throw DegenerateInputError("normalize_dataset: every vector is zero");
  const double scale = U / max_norm;
  for (auto& v : vectors) v *= scale;
  return {scale};
}

DenseVector feature_hash(const SparseVector& v, std::size_t d, std::uint64_t seed) {
  if (d < 2 || !is_power_of_two(d)) throw std::invalid_argument("feature_hash: d must be a power of two >= 2");
  DenseVector out = DenseVector::Zero(static_cast<Eigen::Index>(d));
  const std::uint64_t salt = mix64(seed);
  for (const auto& [edge, value] : v.entries()) {
    const std::uint64_t h = mix64(edge_key(edge) ^ salt);
    const auto index = static_cast<Eigen::Index>(h & (d - 1));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    out(index) += sign * value;
  }
  return out;
}

DenseVector center_dataset(std::span<DenseVector> vectors) {
  if (vectors.empty()) return {};
  DenseVector mean = DenseVector::Zero(vectors.front().size());
  for (const auto& v : vectors) mean += v;
  mean /= static_cast<double>(vectors.size());
  for (auto& v : vectors) v -= mean;
  return mean;
}

}  // namespace ridematch
