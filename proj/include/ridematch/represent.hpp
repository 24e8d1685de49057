#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ridematch/errors.hpp"
#include "ridematch/geo.hpp"
#include "ridematch/roadnet.hpp"

namespace ridematch {

template <typename Scalar>
using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using DenseVector = Dense<double>;

/// Geohash cell annotated with the time bucket in which the ride reaches it.
struct SpaceTimeNode {
  CellId cell;
  TimeBucket bucket;

  friend bool operator==(const SpaceTimeNode&, const SpaceTimeNode&) = default;
  friend auto operator<=>(const SpaceTimeNode&, const SpaceTimeNode&) = default;
};

/// Ordered pair of space-time nodes; the dimension key of ride vectors.
struct SpaceTimeEdge {
  SpaceTimeNode from;
  SpaceTimeNode to;

  friend bool operator==(const SpaceTimeEdge&, const SpaceTimeEdge&) = default;
  friend auto operator<=>(const SpaceTimeEdge&, const SpaceTimeEdge&) = default;
};

/// Stable 64-bit key of an edge (independent of any seed).
std::uint64_t edge_key(const SpaceTimeEdge& e) noexcept;

/// Edge -> accumulated traversal cost (seconds).
using SpaceTimeEdgeSet = std::map<SpaceTimeEdge, double>;

/// Sparse vector indexed by space-time edges. Zero magnitudes are never
/// stored.
class SparseVector {
 public:
  SparseVector() = default;

  void add(const SpaceTimeEdge& key, double value);
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::map<SpaceTimeEdge, double>& entries() const noexcept { return entries_; }
  double norm() const noexcept;
  void scale(double factor);

 private:
  std::map<SpaceTimeEdge, double> entries_;
};

double dot(const SparseVector& a, const SparseVector& b) noexcept;

/// Map a route to its space-time edge set. Route points become
/// (geohash cell, time bucket) nodes using cumulative arrival times from
/// request_time; consecutive duplicates collapse; an edge carries the sum of
/// the segment durations traversed since the previous node change; repeated
/// edges accumulate. Throws std::invalid_argument on an empty route.
SpaceTimeEdgeSet st_edge_set(const Route& route, double request_time, int space_precision,
                             double time_interval_s);

/// Magnitude = edge cost.
SparseVector preprocessing_vector(const SpaceTimeEdgeSet& s);

/// Magnitude = 1 for every edge.
SparseVector query_vector(const SpaceTimeEdgeSet& s);

/// Sum of costs (taken from `costs`) of edges present in both sets.
double intersection_cost(const SpaceTimeEdgeSet& costs, const SpaceTimeEdgeSet& other);

/// One global factor U / max_norm applied to every vector.
struct Normalized {
  double scale = 1.0;
};

/// Scale in place so the largest norm equals U. Throws
/// DegenerateInputError when every vector is zero.
Normalized normalize_dataset(std::span<SparseVector> vectors, double U = 0.75);
Normalized normalize_dataset(std::span<DenseVector> vectors, double U = 0.75);

constexpr bool is_power_of_two(std::size_t x) noexcept { return x != 0 && (x & (x - 1)) == 0; }

constexpr std::size_t next_power_of_two(std::size_t x) noexcept {
  std::size_t p = 1;
  while (p < x) p <<= 1;
  return p;
}

/// Signed feature hashing into d dimensions. Each key goes to one
/// (index, sign) pair derived from a seeded hash, so
/// E[<phi(x), phi(y)>] = <x, y>. Throws std::invalid_argument unless d is a
/// power of two >= 2.
DenseVector feature_hash(const SparseVector& v, std::size_t d, std::uint64_t seed);

/// Scaled copy with unit norm. Throws DegenerateInputError on a zero vector.
template <typename Derived>
Dense<typename Derived::Scalar> unit_normalize(const Eigen::MatrixBase<Derived>& x) {
  const auto n = x.norm();
  if (!(n > 0)) throw DegenerateInputError("zero vector cannot be unit-normalized");
  return x / n;
}

/// Preprocessing transform [x; 1/2 - |x|^2; 1/2 - |x|^4; ...; 1/2 - |x|^(2^m)].
/// Requires |x| < 1 (run normalize_dataset first); throws
/// std::invalid_argument otherwise.
template <typename Derived>
Dense<typename Derived::Scalar> transform_P(const Eigen::MatrixBase<Derived>& x, int m) {
  using Scalar = typename Derived::Scalar;
  if (m < 0) throw std::invalid_argument("transform_P: m must be non-negative");
  const Scalar sq = x.squaredNorm();
  if (!(sq < Scalar(1))) throw std::invalid_argument("transform_P: input norm must be < 1");
  Dense<Scalar> out(x.size() + m);
  out.head(x.size()) = x;
  Scalar power = sq;  // |x|^(2^i)
  for (int i = 0; i < m; ++i) {
    out(x.size() + i) = Scalar(0.5) - power;
    power *= power;
  }
  return out;
}

/// Query transform [x; 0; ...; 0]. Expects x already unit-normalized;
/// throws DegenerateInputError on a zero vector.
template <typename Derived>
Dense<typename Derived::Scalar> transform_Q(const Eigen::MatrixBase<Derived>& x, int m) {
  using Scalar = typename Derived::Scalar;
  if (m < 0) throw std::invalid_argument("transform_Q: m must be non-negative");
  if (!(x.squaredNorm() > Scalar(0))) throw DegenerateInputError("transform_Q: zero query vector");
  Dense<Scalar> out = Dense<Scalar>::Zero(x.size() + m);
  out.head(x.size()) = x;
  return out;
}

/// Subtract the per-dimension mean of the dataset from every vector. Inner
/// products with any fixed query shift by one constant, so rankings hold.
DenseVector center_dataset(std::span<DenseVector> vectors);

}  // namespace ridematch
