#include "ridematch/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ridematch/network.hpp"
#include "ridematch/random.hpp"
#include "ridematch/roadnet.hpp"

namespace ridematch {

namespace {

using nlohmann::json;

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid config:";
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string path, std::vector<std::string>& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems) {
    if (!obj_.is_object()) fail("", "must be an object");
  }

  ~Section() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items())
      if (!seen_.count(key)) fail(key, "unknown key");
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  bool has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  template <typename T>
  void number(const std::string& key, T& out, double lo, double hi) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number()) return fail(key, "must be a number");
    const double x = v->get<double>();
    if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer() && !v->is_number_unsigned()) return fail(key, "must be an integer");
    }
    if (!(x >= lo && x <= hi)) return fail(key, "out of range [" + fmt(lo) + ", " + fmt(hi) + "]");
    out = static_cast<T>(x);
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_boolean()) return fail(key, "must be true or false");
    out = v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(key, "must be a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  void fail(const std::string& key, const std::string& message) const {
    problems_.push_back(where(key) + ": " + message);
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  static std::string fmt(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
  }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::optional<std::vector<double>> number_list(const json* v, std::size_t expected, Section& s, const std::string& key) {
  if (!v) return std::nullopt;
  if (!v->is_array() || (expected && v->size() != expected)) {
    s.fail(key, expected ? "must be an array of " + std::to_string(expected) + " numbers" : "must be an array");
    return std::nullopt;
  }
  std::vector<double> out;
  for (const auto& x : *v) {
    if (!x.is_number()) {
      s.fail(key, "entries must be numbers");
      return std::nullopt;
    }
    out.push_back(x.get<double>());
  }
  return out;
}

void parse_scenario(const json& doc, const std::filesystem::path& base, ExperimentConfig& cfg,
                    std::vector<std::string>& problems) {
  Section s(doc, "scenario", problems);
  const bool has_trips = s.has("trips");
  const bool has_synth = s.has("synth");
  if (has_trips == has_synth) s.fail("", "needs exactly one of trips or synth");

  if (auto path = s.string("trips")) cfg.trips_path = resolve(base, *path);
  if (const json* synth = s.get("synth")) {
    CommuteSpec spec;
    Section ss(*synth, "scenario.synth", problems);
    if (auto mode = ss.string("mode")) {
      if (*mode == "morning" || *mode == "evening")
        spec.mode = parse_commute_mode(*mode);
      else
        ss.fail("mode", "must be morning or evening");
    }
    ss.number("n", spec.n, 1, 1e7);
    ss.number("hotspots", spec.hotspot_count, 1, 1e4);
    ss.number("spread_m", spec.spread_m, 0, 1e5);
    ss.number("core_spread_m", spec.core_spread_m, 0, 1e5);
    ss.number("window_start", spec.window_start, 0, 4e9);
    ss.number("window_end", spec.window_end, 0, 4e9);
    if (spec.window_end <= spec.window_start) ss.fail("window_end", "must be after window_start");
    cfg.synth = spec;
  }

  s.number("utc_offset_s", cfg.utc_offset_s, -86400, 86400);
  if (auto box = number_list(s.get("bbox"), 4, s, "bbox")) {
    GeoBox b{(*box)[0], (*box)[1], (*box)[2], (*box)[3]};
    if (!(b.min_lat < b.max_lat && b.min_lon < b.max_lon) || !is_valid(GeoPoint{b.min_lat, b.min_lon}) ||
        !is_valid(GeoPoint{b.max_lat, b.max_lon}))
      s.fail("bbox", "must be minlat,minlon,maxlat,maxlon with min < max");
    else
      cfg.bbox = b;
  }
  if (const json* w = s.get("window")) {
    if (!w->is_array() || w->size() != 2 || !(*w)[0].is_string() || !(*w)[1].is_string()) {
      s.fail("window", "must be [\"YYYY-MM-DD HH:MM:SS\", \"YYYY-MM-DD HH:MM:SS\"]");
    } else {
      try {
        cfg.window_start = parse_local_datetime((*w)[0].get<std::string>(), cfg.utc_offset_s);
        cfg.window_end = parse_local_datetime((*w)[1].get<std::string>(), cfg.utc_offset_s);
        if (cfg.window_end <= cfg.window_start) s.fail("window", "end must be after start");
      } catch (const std::exception& e) {
        s.fail("window", e.what());
      }
    }
  }
  if (has_trips) {
    if (!cfg.bbox) s.fail("bbox", "required for a trips scenario");
    if (!s.has("window")) s.fail("window", "required for a trips scenario");
  }
}

void parse_network(const json& doc, const std::filesystem::path& base, ExperimentConfig& cfg,
                   std::vector<std::string>& problems) {
  Section s(doc, "network", problems);
  if (s.has("grid") && s.has("file")) s.fail("", "grid and file are mutually exclusive");
  if (auto path = s.string("file")) cfg.network_path = resolve(base, *path);
  if (const json* g = s.get("grid")) {
    Section gs(*g, "network.grid", problems);
    gs.number("rows", cfg.grid.rows, 2, 2000);
    gs.number("cols", cfg.grid.cols, 2, 2000);
    gs.number("spacing_m", cfg.grid.spacing_m, 1, 1e5);
    if (auto o = number_list(gs.get("origin"), 2, gs, "origin")) {
      const GeoPoint p{(*o)[0], (*o)[1]};
      if (is_valid(p))
        cfg.grid.origin = p;
      else
        gs.fail("origin", "not a valid lat,lon");
    }
  }
}

void parse_lsh(const json& doc, ExperimentConfig& cfg, bool& k_set, std::vector<std::string>& problems) {
  Section s(doc, "lsh", problems);
  auto& l = cfg.lsh;
  s.number("tables", l.tables, 1, 4096);
  s.number("hash_bits", l.hash_bits, 1, 64);
  s.number("probes", l.probes, 1, 1 << 16);
  s.number("dim", l.dim, 2, 1 << 20);
  if (!is_power_of_two(l.dim)) s.fail("dim", "must be a power of two");
  s.number("m", l.m, 1, 8);
  s.number("U", l.U, 1e-6, 0.999999);
  s.number("seed", l.seed, 0, 1.8e19);
  k_set = s.has("k");
  s.number("k", l.k, 1, 1e6);
  s.boolean("center", l.center);
  if (auto r = s.string("rotation")) {
    try {
      l.rotation = parse_rotation_kind(*r);
    } catch (const std::exception&) {
      s.fail("rotation", "must be auto, gaussian, hadamard or identity");
    }
  }
}

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double round6(double x) { return std::strtod(fmt6(x).c_str(), nullptr); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string load_label(double load) { return "subsample:" + fmt6(load); }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::string to_string(Approach a) {
  switch (a) {
    case Approach::lsh: return "lsh";
    case Approach::closeby: return "closeby";
    case Approach::haversine: return "haversine";
    case Approach::closeby_haversine: return "closeby_haversine";
    case Approach::optimal: return "optimal";
  }
  return "unknown";
}

std::optional<Approach> parse_approach(const std::string& s) {
  for (Approach a : {Approach::lsh, Approach::closeby, Approach::haversine, Approach::closeby_haversine,
                     Approach::optimal})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::vector<std::string> problems;
  bool lsh_k_set = false;
  {
    Section s(doc, "", problems);
    s.number("seed", cfg.seed, 0, 1.8e19);
    if (const json* sc = s.get("scenario"))
      parse_scenario(*sc, base_dir, cfg, problems);
    else
      s.fail("scenario", "required");
    if (const json* net = s.get("network")) parse_network(*net, base_dir, cfg, problems);

    if (auto loads = number_list(s.get("loads"), 0, s, "loads")) {
      if (loads->empty()) s.fail("loads", "must not be empty");
      for (double x : *loads)
        if (!(x > 0.0 && x <= 1.0)) s.fail("loads", "every load must be in (0, 1], got " + fmt6(x));
      cfg.loads = *loads;
    }
    if (const json* a = s.get("approaches")) {
      if (!a->is_array() || a->empty()) {
        s.fail("approaches", "must be a non-empty array");
      } else {
        cfg.approaches.clear();
        for (const auto& x : *a) {
          const auto parsed = x.is_string() ? parse_approach(x.get<std::string>()) : std::nullopt;
          if (!parsed) {
            s.fail("approaches", "unknown approach " + x.dump());
          } else if (std::find(cfg.approaches.begin(), cfg.approaches.end(), *parsed) != cfg.approaches.end()) {
            s.fail("approaches", "duplicate approach " + x.dump());
          } else {
            cfg.approaches.push_back(*parsed);
          }
        }
      }
    }
    s.number("k", cfg.k, 1, 1e6);
    s.number("delta_t_s", cfg.delta_t_s, 1e-9, 1e9);
    s.number("space_precision", cfg.lsh.space_precision, 1, 12);
    s.number("time_interval_s", cfg.lsh.time_interval_s, 1e-9, 1e9);
    s.number("alternates", cfg.alternates, 1, 16);
    if (const json* l = s.get("lsh")) parse_lsh(*l, cfg, lsh_k_set, problems);
    if (const json* b = s.get("baseline")) {
      Section bs(*b, "baseline", problems);
      bs.number("m_candidates", cfg.m_candidates, 1, 1e7);
      bs.number("nominal_speed_mps", cfg.haversine.nominal_speed_mps, 1e-6, 1e3);
      bs.boolean("delay_proxy", cfg.haversine.delay_proxy);
    }
    s.number("optimal_cap", cfg.optimal_cap, 2, 1e6);
    if (auto m = s.string("matching")) {
      if (*m == "exact" || *m == "greedy")
        cfg.greedy_matching = *m == "greedy";
      else
        s.fail("matching", "must be exact or greedy");
    }
    s.boolean("include_timings", cfg.include_timings);
  }
  if (!lsh_k_set) cfg.lsh.k = cfg.k;
  if (cfg.m_candidates < cfg.k &&
      std::find(cfg.approaches.begin(), cfg.approaches.end(), Approach::closeby_haversine) != cfg.approaches.end())
    problems.push_back("baseline.m_candidates: must be at least k");
  cfg.haversine.max_delay_s = cfg.delta_t_s;
  if (cfg.synth) {
    cfg.synth->seed = derive_seed(cfg.seed, "scenario");
    cfg.synth->alternates = cfg.alternates;
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config " + path.string()});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  return parse_config(doc, path.parent_path());
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const RoadNetwork net = config.network_path
                              ? load_network_json(*config.network_path)
                              : build_grid_network(config.grid.rows, config.grid.cols, config.grid.spacing_m,
                                                   derive_seed(config.seed, "network"), {config.grid.origin});
  RoutingLedger scenario_ledger;
  Workload pool;
  if (config.trips_path) {
    TripFilter filter{*config.bbox, config.window_start, config.window_end, config.utc_offset_s, config.alternates};
    pool = load_trips_csv(*config.trips_path, filter, net, scenario_ledger);
  } else {
    pool = synth_commute(net, *config.synth, scenario_ledger);
  }

  ExperimentReport report;
  for (double load : config.loads) {
    const Workload w = subsample(pool, load, derive_seed(config.seed, load_label(load)));
    const std::span<const Ride> rides(w.rides);
    const double total_cost = w.total_cost();

    std::optional<double> optimal_total;
    std::map<Approach, ReportRow> rows;
    auto base_row = [&](Approach a) {
      ReportRow row;
      row.approach = to_string(a);
      row.load = load;
      row.n = rides.size();
      row.status = "ok";
      row.total_cost_s = total_cost;
      return row;
    };
    auto finish = [&](ReportRow& row, const ShareabilityNetwork& g, const MatchingResult& m,
                      const RoutingLedger& ledger) {
      row.evaluated_pairs = g.evaluated_pairs;
      row.edges = g.edges.size();
      row.matched_pairs = m.pairs.size();
      row.total_utility_s = m.total_utility;
      const auto snap = ledger.snapshot();
      row.routing_calls = snap.call_count;
      row.routing_batches = snap.batch_count;
      row.routing_latency_ms = snap.simulated_latency_ms;
    };

    // Optimal runs first so the other rows can report their fraction.
    const bool want_optimal = std::find(config.approaches.begin(), config.approaches.end(), Approach::optimal) !=
                              config.approaches.end();
    if (want_optimal) {
      ReportRow row = base_row(Approach::optimal);
      try {
        RoutingLedger ledger;
        ledger.record(rides.size());
        ShareabilityNetwork g;
        const auto start = std::chrono::steady_clock::now();
        const auto m = optimal_utility(rides, net, config.delta_t_s, ledger, config.optimal_cap, &g);
        row.network_build_ms = elapsed_ms(start);
        row.mean_candidates = rides.empty() ? 0.0 : static_cast<double>(rides.size() - 1);
        finish(row, g, m, ledger);
        optimal_total = m.total_utility;
      } catch (const std::exception& e) {
        row.status = std::string("failed: ") + e.what();
      }
      rows[Approach::optimal] = row;
    }

    for (Approach a : config.approaches) {
      if (a == Approach::optimal) continue;
      ReportRow row = base_row(a);
      try {
        RoutingLedger ledger;
        ledger.record(rides.size());
        const std::size_t others = rides.empty() ? 0 : rides.size() - 1;
        Proposals proposals;
        auto start = std::chrono::steady_clock::now();
        switch (a) {
          case Approach::lsh: {
            LshConfig lc = config.lsh;
            lc.seed = hash_combine(derive_seed(config.seed, "lsh"), lc.seed);
            const auto found = find_potential_matches(rides, lc);
            for (const auto& [id, list] : found.matches) {
              auto& out = proposals[id];
              for (const auto& s : list) out.push_back(s.id);
            }
            row.mean_candidates = found.mean_candidates;
            break;
          }
          case Approach::closeby:
            proposals = closeby(rides, config.k);
            row.mean_candidates = static_cast<double>(std::min(config.k, others));
            break;
          case Approach::haversine:
            proposals = haversine_topk(rides, config.k, config.haversine);
            row.mean_candidates = static_cast<double>(others);
            break;
          case Approach::closeby_haversine:
            proposals = closeby_haversine(rides, config.k, config.m_candidates, config.haversine);
            row.mean_candidates = static_cast<double>(std::min(config.m_candidates, others));
            break;
          case Approach::optimal:
            break;
        }
        row.search_ms = elapsed_ms(start);
        start = std::chrono::steady_clock::now();
        const auto g = build_network(rides, proposals, net, config.delta_t_s, ledger, to_string(a));
        row.network_build_ms = elapsed_ms(start);
        const auto m = config.greedy_matching ? greedy_matching(g) : max_weight_matching(g);
        finish(row, g, m, ledger);
      } catch (const std::exception& e) {
        row.status = std::string("failed: ") + e.what();
      }
      rows[a] = row;
    }

    for (Approach a : config.approaches) {
      ReportRow row = rows.at(a);
      if (optimal_total && *optimal_total > 0.0 && row.status == "ok")
        row.utility_fraction = row.total_utility_s / *optimal_total;
      if (!config.include_timings) row.search_ms = row.network_build_ms = 0.0;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

namespace {

const char* const kColumns[] = {"approach",        "load",           "n",
                                "status",          "evaluated_pairs", "edges",
                                "matched_pairs",   "total_utility_s", "utility_fraction",
                                "total_cost_s",    "search_ms",       "network_build_ms",
                                "routing_calls",   "routing_batches", "routing_latency_ms",
                                "mean_candidates"};

}  // namespace

void emit_report(const ExperimentReport& report, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::csv) {
    for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
    out << '\n';
    for (const auto& r : report.rows) {
      out << csv_field(r.approach) << ',' << fmt6(r.load) << ',' << r.n << ',' << csv_field(r.status) << ','
          << r.evaluated_pairs << ',' << r.edges << ',' << r.matched_pairs << ',' << fmt6(r.total_utility_s) << ','
          << (r.utility_fraction ? fmt6(*r.utility_fraction) : "") << ',' << fmt6(r.total_cost_s) << ','
          << fmt6(r.search_ms) << ',' << fmt6(r.network_build_ms) << ',' << r.routing_calls << ','
          << r.routing_batches << ',' << fmt6(r.routing_latency_ms) << ',' << fmt6(r.mean_candidates) << '\n';
    }
    return;
  }
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json o;
    o["approach"] = r.approach;
    o["load"] = round6(r.load);
    o["n"] = r.n;
    o["status"] = r.status;
    o["evaluated_pairs"] = r.evaluated_pairs;
    o["edges"] = r.edges;
    o["matched_pairs"] = r.matched_pairs;
    o["total_utility_s"] = round6(r.total_utility_s);
    o["utility_fraction"] = r.utility_fraction ? nlohmann::ordered_json(round6(*r.utility_fraction)) : nullptr;
    o["total_cost_s"] = round6(r.total_cost_s);
    o["search_ms"] = round6(r.search_ms);
    o["network_build_ms"] = round6(r.network_build_ms);
    o["routing_calls"] = r.routing_calls;
    o["routing_batches"] = r.routing_batches;
    o["routing_latency_ms"] = round6(r.routing_latency_ms);
    o["mean_candidates"] = round6(r.mean_candidates);
    rows.push_back(std::move(o));
  }
  nlohmann::ordered_json doc;
  doc["rows"] = std::move(rows);
  out << doc.dump(2) << '\n';
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report to " + path.string());
  emit_report(report, format, out);
  if (!out) throw std::runtime_error("failed writing report to " + path.string());
}

}  // namespace ridematch
