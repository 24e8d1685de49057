#include "ridematch/lshindex.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "ridematch/random.hpp"

namespace ridematch {

namespace {

constexpr Eigen::Index kGaussianMaxDim = 256;

int log2_exact(Eigen::Index x) {
  int b = 0;
  while ((Eigen::Index{1} << b) < x) ++b;
  return b;
}

// One candidate replacement of a function's output during multi-probe.
struct Perturbation {
  double cost;
  std::uint32_t function;
  int output;
};

}  // namespace

RotationKind parse_rotation_kind(const std::string& s) {
  if (s == "identity") return RotationKind::identity;
  if (s == "gaussian") return RotationKind::gaussian;
  if (s == "hadamard") return RotationKind::hadamard;
  if (s == "auto" || s == "automatic") return RotationKind::automatic;
  throw std::invalid_argument("unknown rotation kind '" + s + "'");
}

std::string to_string(RotationKind k) {
  switch (k) {
    case RotationKind::identity: return "identity";
    case RotationKind::gaussian: return "gaussian";
    case RotationKind::hadamard: return "hadamard";
    case RotationKind::automatic: return "auto";
  }
  return "?";
}

// --- CpHashFunction ------------------------------------------------------

CpHashFunction CpHashFunction::identity(Eigen::Index dim, Eigen::Index active_dim) {
  if (dim < 1 || !is_power_of_two(static_cast<std::size_t>(dim)))
    throw std::invalid_argument("hash dimension must be a power of two");
  CpHashFunction h;
  h.kind_ = RotationKind::identity;
  h.dim_ = dim;
  h.active_ = active_dim == 0 ? dim : active_dim;
  if (h.active_ < 1 || h.active_ > dim) throw std::invalid_argument("active dimension out of range");
  return h;
}

CpHashFunction CpHashFunction::random(Eigen::Index dim, std::uint64_t seed, RotationKind kind,
                                      Eigen::Index active_dim) {
  CpHashFunction h = identity(dim, active_dim);
  if (kind == RotationKind::automatic) kind = dim <= kGaussianMaxDim ? RotationKind::gaussian : RotationKind::hadamard;
  h.kind_ = kind;
  Rng rng(seed);
  if (kind == RotationKind::gaussian) {
    Eigen::MatrixXd g(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c)
      for (Eigen::Index r = 0; r < dim; ++r) g(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::MatrixXd& r = qr.matrixQR();
    // Sign fix so the rotation is Haar distributed.
    for (Eigen::Index c = 0; c < dim; ++c)
      if (r(c, c) < 0) q.col(c) *= -1.0;
    h.rotation_ = std::move(q);
  } else if (kind == RotationKind::hadamard) {
    h.signs_.resize(3);
    for (auto& s : h.signs_) {
      s.resize(dim);
      for (Eigen::Index i = 0; i < dim; ++i) s(i) = (rng.next() >> 63) ? -1.0 : 1.0;
    }
  }
  return h;
}

DenseVector CpHashFunction::rotate(const DenseVector& x) const {
  if (x.size() > dim_) throw std::invalid_argument("vector longer than hash dimension");
  DenseVector y = DenseVector::Zero(dim_);
  y.head(x.size()) = x;
  switch (kind_) {
    case RotationKind::gaussian:
      return rotation_ * y;
    case RotationKind::hadamard:
      for (const auto& s : signs_) {
        y.array() *= s.array();
        hadamard_transform(y);
      }
      return y;
    default:
      return y;
  }
}

Eigen::MatrixXd CpHashFunction::matrix() const {
  if (kind_ == RotationKind::gaussian) return rotation_;
  Eigen::MatrixXd m(dim_, dim_);
  for (Eigen::Index c = 0; c < dim_; ++c) m.col(c) = rotate(DenseVector::Unit(dim_, c));
  return m;
}

int CpHashFunction::hash(const DenseVector& x) const {
  if (!(x.squaredNorm() > 0.0)) throw std::invalid_argument("cp_hash of a zero vector");
  return cross_polytope_code(rotate(x), active_);
}

// --- AmplifiedHash --------------------------------------------------------

AmplifiedHash::AmplifiedHash(Eigen::Index dim, int hash_bits, std::uint64_t seed, RotationKind kind)
    : bits_(hash_bits) {
  if (hash_bits < 1) throw std::invalid_argument("hash_bits must be >= 1");
  const int full_bits = log2_exact(dim) + 1;
  const int full = hash_bits / full_bits;
  const int rest = hash_bits % full_bits;
  std::uint64_t fn = 0;
  for (int i = 0; i < full; ++i) functions_.push_back(CpHashFunction::random(dim, hash_combine(seed, fn++), kind));
  if (rest > 0)
    functions_.push_back(
        CpHashFunction::random(dim, hash_combine(seed, fn++), kind, Eigen::Index{1} << (rest - 1)));
}

std::uint64_t AmplifiedHash::combine(std::span<const int> outputs) noexcept {
  std::uint64_t key = 0x243f6a8885a308d3ULL;
  for (int o : outputs) key = hash_combine(key, static_cast<std::uint64_t>(o));
  return key;
}

std::uint64_t AmplifiedHash::key(const DenseVector& x) const {
  std::vector<int> outputs;
  outputs.reserve(functions_.size());
  for (const auto& f : functions_) outputs.push_back(cross_polytope_code(f.rotate(x), f.active_dimension()));
  return combine(outputs);
}

std::vector<std::uint64_t> AmplifiedHash::probe_keys(const DenseVector& x, std::size_t probes) const {
  std::vector<int> base;
  std::vector<Perturbation> pool;
  const std::size_t per_function = probes > 0 ? probes - 1 : 0;
  for (std::uint32_t fi = 0; fi < functions_.size(); ++fi) {
    const auto& f = functions_[fi];
    const DenseVector y = f.rotate(x);
    const int code = cross_polytope_code(y, f.active_dimension());
    base.push_back(code);
    if (per_function == 0) continue;
    const double top = std::abs(y(code / 2));
    std::vector<Perturbation> alts;
    for (Eigen::Index j = 0; j < f.active_dimension(); ++j) {
      for (int neg = 0; neg < 2; ++neg) {
        const int out = static_cast<int>(2 * j + neg);
        if (out == code) continue;
        const double value = neg ? -y(j) : y(j);
        alts.push_back({top - value, fi, out});
      }
    }
    const std::size_t keep = std::min(per_function, alts.size());
    auto by_cost = [](const Perturbation& a, const Perturbation& b) {
      return a.cost != b.cost ? a.cost < b.cost : a.output < b.output;
    };
    std::partial_sort(alts.begin(), alts.begin() + static_cast<std::ptrdiff_t>(keep), alts.end(), by_cost);
    pool.insert(pool.end(), alts.begin(), alts.begin() + static_cast<std::ptrdiff_t>(keep));
  }

  std::vector<std::uint64_t> keys{combine(base)};
  if (probes <= 1 || pool.empty()) return keys;
  std::sort(pool.begin(), pool.end(), [](const Perturbation& a, const Perturbation& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.function != b.function) return a.function < b.function;
    return a.output < b.output;
  });

  // Perturbation sets in increasing total cost (shift / expand enumeration
  // over the sorted pool).
  using Set = std::pair<double, std::vector<std::uint32_t>>;
  auto later = [](const Set& a, const Set& b) { return a.first != b.first ? a.first > b.first : a.second > b.second; };
  std::priority_queue<Set, std::vector<Set>, decltype(later)> heap(later);
  heap.push({pool[0].cost, {0}});
  std::vector<int> outputs;
  while (keys.size() < probes && !heap.empty()) {
    Set top = heap.top();
    heap.pop();
    const std::uint32_t last = top.second.back();
    if (last + 1 < pool.size()) {
      Set shift = top;
      shift.second.back() = last + 1;
      shift.first += pool[last + 1].cost - pool[last].cost;
      heap.push(std::move(shift));
      Set expand = top;
      expand.second.push_back(last + 1);
      expand.first += pool[last + 1].cost;
      heap.push(std::move(expand));
    }
    outputs = base;
    bool valid = true;
    std::vector<char> touched(functions_.size(), 0);
    for (std::uint32_t idx : top.second) {
      const auto& p = pool[idx];
      if (touched[p.function]) {
        valid = false;
        break;
      }
      touched[p.function] = 1;
      outputs[p.function] = p.output;
    }
    if (valid) keys.push_back(combine(outputs));
  }
  return keys;
}

// --- LshIndex -------------------------------------------------------------

LshIndex build_index(std::vector<IndexItem> items, const LshParams& params) {
  if (items.empty()) throw DegenerateInputError("build_index: no vectors");
  if (params.tables < 1) throw std::invalid_argument("build_index: tables must be >= 1");
  if (params.hash_bits < 1) throw std::invalid_argument("build_index: hash_bits must be >= 1");
  const Eigen::Index length = items.front().vector.size();
  for (const auto& it : items)
    if (it.vector.size() != length) throw std::invalid_argument("build_index: vectors differ in length");

  LshIndex index;
  index.params_ = params;
  index.dim_ = static_cast<Eigen::Index>(next_power_of_two(static_cast<std::size_t>(std::max<Eigen::Index>(1, length))));
  index.items_ = std::move(items);
  index.hashes_.reserve(params.tables);
  index.tables_.resize(params.tables);
  for (std::size_t t = 0; t < params.tables; ++t) {
    index.hashes_.emplace_back(index.dim_, params.hash_bits, hash_combine(params.seed, t), params.rotation);
    auto& table = index.tables_[t];
    for (std::uint32_t i = 0; i < index.items_.size(); ++i)
      table[index.hashes_[t].key(index.items_[i].vector)].push_back(i);
  }
  return index;
}

std::size_t LshIndex::total_entries() const noexcept {
  std::size_t total = 0;
  for (const auto& table : tables_)
    for (const auto& [key, bucket] : table) total += bucket.size();
  return total;
}

std::span<const std::uint32_t> LshIndex::bucket(std::size_t table, std::uint64_t key) const {
  const auto& t = tables_.at(table);
  const auto it = t.find(key);
  if (it == t.end()) return {};
  return it->second;
}

QueryResult LshIndex::query(const DenseVector& q, std::size_t k, std::size_t probes_per_table,
                            std::optional<RideId> exclude) const {
  if (k < 1) throw std::invalid_argument("query: k must be >= 1");
  if (probes_per_table < 1) throw std::invalid_argument("query: probes_per_table must be >= 1");
  QueryResult result;
  if (items_.empty()) return result;
  if (q.size() != items_.front().vector.size()) throw std::invalid_argument("query: dimension mismatch");

  std::vector<char> seen(items_.size(), 0);
  std::unordered_map<RideId, double> best;
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto keys = probes_per_table == 1 ? std::vector<std::uint64_t>{hashes_[t].key(q)}
                                            : hashes_[t].probe_keys(q, probes_per_table);
    for (std::uint64_t key : keys) {
      for (std::uint32_t idx : bucket(t, key)) {
        if (seen[idx]) continue;
        seen[idx] = 1;
        const IndexItem& item = items_[idx];
        if (exclude && item.ride == *exclude) continue;
        ++result.candidates;
        const double score = q.dot(item.vector);
        auto [it, inserted] = best.try_emplace(item.ride, score);
        if (!inserted && score > it->second) it->second = score;
      }
    }
  }

  result.matches.reserve(best.size());
  for (const auto& [ride, score] : best) result.matches.push_back({ride, score});
  const std::size_t keep = std::min(k, result.matches.size());
  std::partial_sort(result.matches.begin(), result.matches.begin() + static_cast<std::ptrdiff_t>(keep),
                    result.matches.end(), ranks_before);
  result.matches.resize(keep);
  return result;
}

// --- Pipeline -------------------------------------------------------------

PotentialMatches find_potential_matches(std::span<const Ride> rides, const LshConfig& config) {
  if (config.k < 1) throw std::invalid_argument("lsh.k must be >= 1");
  if (config.probes < 1) throw std::invalid_argument("lsh.probes must be >= 1");
  const std::uint64_t hash_seed = derive_seed(config.seed, "feature_hash");
  const std::uint64_t table_seed = derive_seed(config.seed, "tables");

  PotentialMatches out;
  std::vector<IndexItem> items;
  std::vector<DenseVector> data;
  std::vector<std::pair<RideId, DenseVector>> queries;

  for (const auto& ride : rides) {
    out.matches[ride.id];
    bool ok = false;
    for (std::uint32_t ri = 0; ri < ride.routes.size(); ++ri) {
      const auto set = st_edge_set(ride.routes[ri], static_cast<double>(ride.request_time), config.space_precision,
                                   config.time_interval_s);
      if (set.empty()) {
        if (ri == 0) break;
        continue;
      }
      DenseVector pre = feature_hash(preprocessing_vector(set), config.dim, hash_seed);
      if (!(pre.squaredNorm() > 0.0)) {
        if (ri == 0) break;
        continue;
      }
      if (ri == 0) {
        DenseVector q = feature_hash(query_vector(set), config.dim, hash_seed);
        if (!(q.squaredNorm() > 0.0)) break;
        queries.emplace_back(ride.id, std::move(q));
        ok = true;
      }
      items.push_back({ride.id, ri, DenseVector{}});
      data.push_back(std::move(pre));
    }
    if (!ok) out.degenerate.push_back(ride.id);
  }
  // Alternates are only represented once the best route produced a query,
  // so every stored item belongs to a queried ride.
  if (items.empty()) return out;

  if (config.center) center_dataset(data);
  normalize_dataset(data, config.U);
  for (std::size_t i = 0; i < items.size(); ++i) items[i].vector = transform_P(data[i], config.m);
  out.indexed_vectors = items.size();

  const LshIndex index = build_index(std::move(items), {config.tables, config.hash_bits, table_seed, config.rotation});
  std::size_t candidates = 0;
  for (const auto& [id, qhash] : queries) {
    const DenseVector q = transform_Q(unit_normalize(qhash), config.m);
    auto res = index.query(q, config.k, config.probes, id);
    candidates += res.candidates;
    out.matches[id] = std::move(res.matches);
  }
  out.mean_candidates = queries.empty() ? 0.0 : static_cast<double>(candidates) / static_cast<double>(queries.size());
  return out;
}

LshSuggestion suggest_params(std::size_t n, std::size_t k, double failure_probability, double rho_estimate) {
  if (n < 2) throw std::invalid_argument("suggest_params: n must be >= 2");
  if (k < 1) throw std::invalid_argument("suggest_params: k must be >= 1");
  if (!(failure_probability > 0.0 && failure_probability < 1.0))
    throw std::invalid_argument("suggest_params: failure probability must be in (0, 1)");
  if (!(rho_estimate > 0.0 && rho_estimate < 1.0))
    throw std::invalid_argument("suggest_params: rho must be in (0, 1)");
  const double bits = std::ceil(std::log2(static_cast<double>(n)));
  const double tables =
      std::ceil(std::pow(static_cast<double>(n), rho_estimate) * std::log(static_cast<double>(k) / failure_probability));
  LshSuggestion s;
  s.hash_bits = static_cast<int>(std::clamp(bits, 4.0, 20.0));
  s.tables = static_cast<std::size_t>(std::clamp(tables, 8.0, 512.0));
  return s;
}

}  // namespace ridematch
