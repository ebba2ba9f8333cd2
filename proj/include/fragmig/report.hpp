#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fragmig/common.hpp"
#include "fragmig/correlation.hpp"
#include "fragmig/simulator.hpp"
#include "fragmig/training.hpp"

namespace fragmig {

/// Header plus string rows. Fields with commas, quotes or newlines are quoted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void csv_line(std::ostringstream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << csv_field(fields[i]);
  os << '\n';
}

}  // namespace detail

inline std::string to_csv(const CsvTable& t) {
  std::ostringstream os;
  detail::csv_line(os, t.header);
  for (const auto& r : t.rows) detail::csv_line(os, r);
  return os.str();
}

inline CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        lines.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ParseError("csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    lines.push_back(std::move(row));
  }
  if (lines.empty()) throw ParseError("csv: missing header");
  CsvTable t;
  t.header = std::move(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != t.header.size())
      throw ParseError("csv: row " + std::to_string(i) + " has " + std::to_string(lines[i].size()) + " fields, expected " +
                       std::to_string(t.header.size()));
    t.rows.push_back(std::move(lines[i]));
  }
  return t;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  os << text;
}

inline std::string fmt(double x) { return format_double(x); }
template <typename T>
inline std::string fmt_int(T x) { return std::to_string(x); }

// ---------------------------------------------------------------------------
// Simulation outputs

inline CsvTable metrics_table(const MetricsLog& log) {
  CsvTable t;
  t.header = {"slot", "arrivals", "accepted", "released", "active", "triggered", "overloaded_nodes", "overloaded_links",
              "overloaded", "migrations", "failures", "reroutes", "fragmentation", "loss"};
  for (auto n : LoadMetrics::kNames) t.header.emplace_back(n);
  for (const auto& r : log.slots) {
    std::vector<std::string> row = {fmt_int(r.slot),       fmt_int(r.arrivals),         fmt_int(r.accepted),
                                    fmt_int(r.released),   fmt_int(r.active),           fmt_int(int(r.triggered)),
                                    fmt_int(r.overloaded_nodes), fmt_int(r.overloaded_links), fmt_int(int(r.overloaded())),
                                    fmt_int(r.migrations), fmt_int(r.failures),         fmt_int(r.reroutes),
                                    fmt(r.fragmentation),  fmt(r.loss)};
    for (double v : r.load.values()) row.push_back(fmt(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable events_table(const MetricsLog& log) {
  CsvTable t;
  t.header = {"slot", "kind", "element_site", "sfc", "element", "from", "to", "loss"};
  for (const auto& [slot, e] : log.events)
    t.rows.push_back({fmt_int(slot), nlohmann::json(e.kind).get<std::string>(), fmt_int(e.node), fmt_int(e.sfc),
                      fmt_int(e.element), fmt_int(e.from), fmt_int(e.to), fmt(e.loss)});
  return t;
}

inline CsvTable timing_table(const MetricsLog& log) {
  CsvTable t;
  t.header = {"slot", "round_ms"};
  for (const auto& r : log.slots)
    if (r.triggered) t.rows.push_back({fmt_int(r.slot), fmt(r.round_ms)});
  return t;
}

inline CsvTable training_table(const TrainResult& r) {
  CsvTable t;
  t.header = {"epoch", "train_mse", "val_mse"};
  for (const auto& e : r.curve) t.rows.push_back({fmt_int(e.epoch), fmt(e.train_mse), fmt(e.val_mse)});
  return t;
}

inline CsvTable training_timing_table(const TrainResult& r) {
  CsvTable t;
  t.header = {"epoch", "wall_ms"};
  for (const auto& e : r.curve) t.rows.push_back({fmt_int(e.epoch), fmt(e.wall_ms)});
  return t;
}

// ---------------------------------------------------------------------------
// Sweeps

inline const std::vector<std::pair<std::string, double SimSummary::*>>& summary_metrics() {
  static const std::vector<std::pair<std::string, double SimSummary::*>> m = {
      {"acceptance_ratio", &SimSummary::acceptance_ratio},
      {"overload_ratio", &SimSummary::overload_ratio},
      {"migration_loss", &SimSummary::total_loss},
      {"mean_fragmentation", &SimSummary::mean_fragmentation},
      {"objective", &SimSummary::objective},
  };
  return m;
}

/// Long format: one row per (value, seed, policy, metric).
inline CsvTable sweep_table(SweepParameter p, const std::vector<SweepCell>& cells) {
  if (cells.empty()) throw ConfigError("report: empty sweep");
  CsvTable t;
  t.header = {"parameter", "value", "seed", "policy", "metric", "metric_value"};
  for (const auto& c : cells)
    for (const auto& [name, field] : summary_metrics())
      t.rows.push_back({to_string(p), fmt(c.value), fmt_int(c.seed), to_string(c.policy), name, fmt(c.summary.*field)});
  return t;
}

struct CellStats {
  double mean = 0, stddev = 0;
  std::size_t n = 0;
};

/// Mean and sample standard deviation over seeds per (value, policy, metric).
inline std::map<std::tuple<double, PolicyKind, std::string>, CellStats> aggregate(const std::vector<SweepCell>& cells) {
  std::map<std::tuple<double, PolicyKind, std::string>, std::vector<double>> groups;
  for (const auto& c : cells)
    for (const auto& [name, field] : summary_metrics()) groups[{c.value, c.policy, name}].push_back(c.summary.*field);
  std::map<std::tuple<double, PolicyKind, std::string>, CellStats> out;
  for (const auto& [key, xs] : groups) {
    CellStats s;
    s.n = xs.size();
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
    if (s.n > 1) {
      double ss = 0;
      for (double x : xs) ss += (x - s.mean) * (x - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    out[key] = s;
  }
  return out;
}

inline CsvTable sweep_summary_table(SweepParameter p, const std::vector<SweepCell>& cells) {
  if (cells.empty()) throw ConfigError("report: empty sweep");
  CsvTable t;
  t.header = {"parameter", "value", "policy", "metric", "mean", "stddev", "n"};
  for (const auto& [key, s] : aggregate(cells)) {
    const auto& [value, policy, metric] = key;
    t.rows.push_back({to_string(p), fmt(value), to_string(policy), metric, fmt(s.mean), fmt(s.stddev), fmt_int(s.n)});
  }
  return t;
}

/// Plot-ready (x, y, series) triples, one table per panel:
/// acceptance, overload, loss and fragmentation against the swept parameter.
inline std::vector<std::pair<std::string, CsvTable>> sweep_series(SweepParameter p, const std::vector<SweepCell>& cells) {
  if (cells.empty()) throw ConfigError("report: empty sweep");
  const auto stats = aggregate(cells);
  const std::vector<std::pair<std::string, std::string>> panels = {{"acceptance", "acceptance_ratio"},
                                                                   {"overload", "overload_ratio"},
                                                                   {"loss", "migration_loss"},
                                                                   {"frag", "mean_fragmentation"}};
  std::string x = to_string(p);
  std::vector<std::pair<std::string, CsvTable>> out;
  for (const auto& [panel, metric] : panels) {
    CsvTable t;
    t.header = {"x", "y", "series"};
    for (const auto& [key, s] : stats)
      if (std::get<2>(key) == metric) t.rows.push_back({fmt(std::get<0>(key)), fmt(s.mean), to_string(std::get<1>(key))});
    out.emplace_back(panel + "_vs_" + x + ".csv", std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation study and runtime

inline CsvTable correlation_points_table(const CorrelationStudy& s) {
  CsvTable t;
  t.header = {"lambda", "seed", "overload_ratio"};
  for (auto n : LoadMetrics::kNames) t.header.emplace_back(n);
  for (const auto& p : s.points) {
    std::vector<std::string> row = {fmt(p.lambda), fmt_int(p.seed), fmt(p.overload_ratio)};
    for (double v : p.mean_load.values()) row.push_back(fmt(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Bar-table layout: one row per (metric, coefficient type).
inline CsvTable correlation_table(const CorrelationStudy& s) {
  CsvTable t;
  t.header = {"metric", "method", "coefficient"};
  for (std::size_t i = 0; i < LoadMetrics::kNames.size(); ++i)
    for (std::size_t m = 0; m < kCorrelationMethods.size(); ++m)
      t.rows.push_back({std::string(LoadMetrics::kNames[i]), std::string(to_string(kCorrelationMethods[m])), fmt(s.coefficient[i][m])});
  return t;
}

inline CsvTable runtime_table(const std::vector<RuntimeRow>& rows) {
  CsvTable t;
  t.header = {"nodes", "policy", "median_ms", "min_ms", "max_ms", "trials"};
  for (const auto& r : rows)
    t.rows.push_back({fmt_int(r.nodes), to_string(r.policy), fmt(r.median_ms), fmt(r.min_ms), fmt(r.max_ms), fmt_int(r.trials)});
  return t;
}

inline CsvTable runtime_series(const std::vector<RuntimeRow>& rows) {
  CsvTable t;
  t.header = {"x", "y", "series"};
  for (const auto& r : rows) t.rows.push_back({fmt_int(r.nodes), fmt(r.median_ms), to_string(r.policy)});
  return t;
}

inline CsvTable decisions_table(const std::vector<RuntimeRow>& rows) {
  CsvTable t;
  t.header = {"nodes", "policy", "sfc", "vnf", "destination"};
  for (const auto& r : rows)
    t.rows.push_back({fmt_int(r.nodes), to_string(r.policy), fmt_int(r.vnf.sfc), fmt_int(r.vnf.vnf),
                      r.destination ? fmt_int(*r.destination) : std::string("none")});
  return t;
}

}  // namespace fragmig
