#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ridematch/baselines.hpp"
#include "ridematch/geo.hpp"
#include "ridematch/lshindex.hpp"
#include "ridematch/trips.hpp"

namespace ridematch {

/// Every validation problem found in a config, reported together.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class Approach { lsh, closeby, haversine, closeby_haversine, optimal };

std::string to_string(Approach a);
std::optional<Approach> parse_approach(const std::string& s);

struct GridSpec {
  int rows = 20;
  int cols = 20;
  double spacing_m = 250.0;
  GeoPoint origin{40.7484, -73.9857};
};

struct ExperimentConfig {
  // scenario: exactly one of trips_path / synth
  std::optional<std::filesystem::path> trips_path;
  std::optional<CommuteSpec> synth;
  // network: a grid unless network_path is set
  std::optional<std::filesystem::path> network_path;
  GridSpec grid;
  std::optional<GeoBox> bbox;  // required with trips_path
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  std::int64_t utc_offset_s = 0;

  std::vector<double> loads{1.0};
  std::vector<Approach> approaches{Approach::lsh, Approach::closeby, Approach::closeby_haversine,
                                   Approach::optimal};
  std::size_t k = 10;
  double delta_t_s = 600.0;
  int alternates = 1;
  LshConfig lsh;
  std::size_t m_candidates = kDefaultCandidatePool;
  HaversineOptions haversine;
  std::size_t optimal_cap = 3000;
  bool greedy_matching = false;
  std::uint64_t seed = 1;
  bool include_timings = true;
};

/// Parse and validate a JSON config. Relative paths resolve against
/// base_dir. Throws ConfigError listing every problem.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct ReportRow {
  std::string approach;
  double load = 0.0;
  std::size_t n = 0;
  std::string status;  // "ok" or "failed: <reason>"
  std::size_t evaluated_pairs = 0;
  std::size_t edges = 0;
  std::size_t matched_pairs = 0;
  double total_utility_s = 0.0;
  std::optional<double> utility_fraction;  // of optimal, when computed
  double total_cost_s = 0.0;
  double search_ms = 0.0;
  double network_build_ms = 0.0;
  std::uint64_t routing_calls = 0;
  std::uint64_t routing_batches = 0;
  double routing_latency_ms = 0.0;
  double mean_candidates = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
};

/// Per load: subsample, then per approach propose -> build network ->
/// match -> metrics. Each approach charges a fresh ledger n calls for the
/// rides plus 6 per evaluated pair. A failing approach yields a failed row.
ExperimentReport run_experiment(const ExperimentConfig& config);

enum class ReportFormat { csv, json };

/// Stable column order, floats at 6 significant digits.
void emit_report(const ExperimentReport& report, ReportFormat format, std::ostream& out);
void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path);

}  // namespace ridematch
