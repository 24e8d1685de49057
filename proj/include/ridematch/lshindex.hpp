#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ridematch/represent.hpp"
#include "ridematch/trips.hpp"
#include "ridematch/utility.hpp"

namespace ridematch {

enum class RotationKind {
  identity,   // test seam
  gaussian,   // dense Gaussian matrix, orthogonalized by QR
  hadamard,   // three rounds of random sign flips + Walsh-Hadamard
  automatic,  // gaussian up to 256 dimensions, hadamard above
};

RotationKind parse_rotation_kind(const std::string& s);
std::string to_string(RotationKind k);

/// In-place normalized Walsh-Hadamard transform; size must be a power of two.
template <typename Derived>
void hadamard_transform(Eigen::MatrixBase<Derived>& x) {
  const Eigen::Index n = x.size();
  for (Eigen::Index h = 1; h < n; h <<= 1) {
    for (Eigen::Index i = 0; i < n; i += h << 1) {
      for (Eigen::Index j = i; j < i + h; ++j) {
        const auto a = x(j);
        const auto b = x(j + h);
        x(j) = a + b;
        x(j + h) = a - b;
      }
    }
  }
  x *= typename Derived::Scalar(1) / std::sqrt(static_cast<typename Derived::Scalar>(n));
}

/// Index of the rotated coordinate with the largest magnitude among the
/// first `active` coordinates (lowest index on ties), doubled, plus one when
/// that coordinate is negative.
template <typename Derived>
int cross_polytope_code(const Eigen::MatrixBase<Derived>& rotated, Eigen::Index active) {
  Eigen::Index best = 0;
  auto best_abs = std::abs(rotated(0));
  for (Eigen::Index j = 1; j < active; ++j) {
    const auto a = std::abs(rotated(j));
    if (a > best_abs) {
      best_abs = a;
      best = j;
    }
  }
  return static_cast<int>(2 * best + (rotated(best) < 0 ? 1 : 0));
}

/// One cross-polytope hash: a seeded rotation of R^dim followed by the
/// nearest signed basis vector among the first active_dim coordinates.
class CpHashFunction {
 public:
  /// dim must be a power of two, 1 <= active_dim <= dim.
  static CpHashFunction identity(Eigen::Index dim, Eigen::Index active_dim = 0);
  static CpHashFunction random(Eigen::Index dim, std::uint64_t seed, RotationKind kind = RotationKind::automatic,
                               Eigen::Index active_dim = 0);

  Eigen::Index dimension() const noexcept { return dim_; }
  Eigen::Index active_dimension() const noexcept { return active_; }
  int output_count() const noexcept { return static_cast<int>(2 * active_); }
  RotationKind kind() const noexcept { return kind_; }

  /// Rotated copy of x zero-padded to dimension(). x.size() <= dimension().
  DenseVector rotate(const DenseVector& x) const;

  /// Dense rotation matrix (materialized for hadamard kinds on request).
  Eigen::MatrixXd matrix() const;

  /// Hash value in [0, 2 * active_dimension()). Throws std::invalid_argument
  /// on a zero vector.
  int hash(const DenseVector& x) const;

 private:
  CpHashFunction() = default;

  RotationKind kind_ = RotationKind::identity;
  Eigen::Index dim_ = 0;
  Eigen::Index active_ = 0;
  Eigen::MatrixXd rotation_;
  std::vector<Eigen::VectorXd> signs_;
};

inline int cp_hash(const CpHashFunction& h, const DenseVector& x) { return h.hash(x); }

/// Concatenated cross-polytope hashes whose outputs total `hash_bits` bits:
/// as many full functions (log2(2 * dim) bits each) as fit, then one
/// function restricted to 2^(r-1) coordinates for the r leftover bits. The
/// bucket key is a 64-bit mix of the outputs.
class AmplifiedHash {
 public:
  AmplifiedHash(Eigen::Index dim, int hash_bits, std::uint64_t seed, RotationKind kind);

  std::span<const CpHashFunction> functions() const noexcept { return functions_; }
  int hash_bits() const noexcept { return bits_; }

  std::uint64_t key(const DenseVector& x) const;

  /// Up to `probes` distinct bucket keys: the home bucket first, then
  /// perturbations in increasing total margin cost. A perturbation replaces
  /// one function's output with a runner-up coordinate; at most one
  /// replacement per function.
  std::vector<std::uint64_t> probe_keys(const DenseVector& x, std::size_t probes) const;

  static std::uint64_t combine(std::span<const int> outputs) noexcept;

 private:
  std::vector<CpHashFunction> functions_;
  int bits_;
};

struct LshParams {
  std::size_t tables = 100;
  int hash_bits = 14;
  std::uint64_t seed = 1;
  RotationKind rotation = RotationKind::automatic;
};

/// A stored data-side vector (already P-transformed).
struct IndexItem {
  RideId ride = 0;
  std::uint32_t route = 0;
  DenseVector vector;
};

struct QueryResult {
  std::vector<ScoredRide> matches;  // descending score, ascending id
  std::size_t candidates = 0;       // distinct items re-scored
};

/// L hash tables of amplified cross-polytope hashes over P-transformed ride
/// vectors, with exact inner-product re-scoring of retrieved candidates.
class LshIndex {
 public:
  std::size_t size() const noexcept { return items_.size(); }
  std::size_t table_count() const noexcept { return tables_.size(); }
  Eigen::Index dimension() const noexcept { return dim_; }
  const LshParams& params() const noexcept { return params_; }
  std::span<const IndexItem> items() const noexcept { return items_; }

  /// Number of (table, item) insertions; size() * table_count() when built.
  std::size_t total_entries() const noexcept;

  /// Bucket contents for a key in one table (item indices).
  std::span<const std::uint32_t> bucket(std::size_t table, std::uint64_t key) const;
  const AmplifiedHash& hash(std::size_t table) const { return hashes_.at(table); }

  /// q must already be Q-transformed. Candidates from the probed buckets of
  /// every table are de-duplicated per ride (best route kept), re-scored by
  /// exact inner product, and the top k returned. `exclude` drops the
  /// query's own ride.
  QueryResult query(const DenseVector& q, std::size_t k, std::size_t probes_per_table,
                    std::optional<RideId> exclude = std::nullopt) const;

 private:
  friend LshIndex build_index(std::vector<IndexItem> items, const LshParams& params);

  LshParams params_;
  Eigen::Index dim_ = 0;
  std::vector<IndexItem> items_;
  std::vector<AmplifiedHash> hashes_;
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::uint32_t>>> tables_;
};

/// Throws DegenerateInputError on empty input, std::invalid_argument when
/// tables or hash_bits < 1 or vector lengths differ.
LshIndex build_index(std::vector<IndexItem> items, const LshParams& params);

/// End-to-end configuration of the potential-match search.
struct LshConfig {
  std::size_t tables = 100;  // lsh.tables
  int hash_bits = 14;        // lsh.hash_bits
  std::size_t probes = 1;    // lsh.probes (per table)
  std::size_t dim = 1024;    // lsh.dim, feature-hash dimension
  int m = 2;                 // lsh.m
  double U = 0.75;           // lsh.U
  std::uint64_t seed = 1;    // lsh.seed
  std::size_t k = 10;        // lsh.k
  bool center = false;       // lsh.center
  RotationKind rotation = RotationKind::automatic;
  int space_precision = 7;
  double time_interval_s = 1200.0;
};

struct PotentialMatches {
  std::map<RideId, std::vector<ScoredRide>> matches;
  std::vector<RideId> degenerate;  // rides with an empty representation
  std::size_t indexed_vectors = 0;
  double mean_candidates = 0.0;
};

/// Represent every ride (each cached route becomes a data-side vector, the
/// best route is the query), build the index and retrieve up to k matches
/// per ride.
PotentialMatches find_potential_matches(std::span<const Ride> rides, const LshConfig& config);

struct LshSuggestion {
  std::size_t tables = 0;
  int hash_bits = 0;

  friend bool operator==(const LshSuggestion&, const LshSuggestion&) = default;
};

/// hash_bits = ceil(log2 n) clamped to [4, 20];
/// tables = ceil(n^rho * ln(k / f)) clamped to [8, 512].
LshSuggestion suggest_params(std::size_t n, std::size_t k, double failure_probability, double rho_estimate);

}  // namespace ridematch
