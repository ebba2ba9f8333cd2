#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fragmig/common.hpp"

namespace fragmig {

using SfcId = std::uint64_t;
using Rng = std::mt19937_64;

/// Per-slot demand samples; offsets past the end wrap cyclically.
template <typename Vec>
struct DemandSeries {
  std::vector<Vec> samples;

  const Vec& at(std::size_t offset) const { return samples[offset % samples.size()]; }
  friend bool operator==(const DemandSeries&, const DemandSeries&) = default;
};

struct Vnf {
  std::uint32_t id = 0;  // index within its SFC, topological order
  SfcId owner = 0;
  int start_slot = 0;
  DemandSeries<NodeVec> demand;
  double processing_delay_ms = 0.0;

  friend bool operator==(const Vnf&, const Vnf&) = default;
};

struct VnfLink {
  std::uint32_t id = 0;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  int start_slot = 0;
  DemandSeries<LinkVec> demand;
  double deadline_ms = 0.0;

  friend bool operator==(const VnfLink&, const VnfLink&) = default;
};

struct SfcRequest {
  SfcId id = 0;
  int arrival = 0;
  int lifetime = 1;
  double latency_limit_ms = 0.0;
  std::vector<Vnf> vnfs;
  std::vector<VnfLink> links;

  int expiry() const { return arrival + lifetime; }
  friend bool operator==(const SfcRequest&, const SfcRequest&) = default;
};

inline NodeVec demand_at(const Vnf& v, int t) {
  return v.demand.at(static_cast<std::size_t>(std::max(0, t - v.start_slot)));
}

inline LinkVec demand_at(const VnfLink& l, int t) {
  return l.demand.at(static_cast<std::size_t>(std::max(0, t - l.start_slot)));
}

/// True when the VNF links form a DAG over the VNFs.
inline bool is_dag(const SfcRequest& sfc) {
  const std::size_t n = sfc.vnfs.size();
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& l : sfc.links) {
    if (l.src >= n || l.dst >= n || l.src == l.dst) return false;
    ++indeg[l.dst];
  }
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::size_t visited = 0;
  while (!ready.empty()) {
    auto v = ready.back();
    ready.pop_back();
    ++visited;
    for (const auto& l : sfc.links)
      if (l.src == v && --indeg[l.dst] == 0) ready.push_back(l.dst);
  }
  return visited == n;
}

// ---------------------------------------------------------------------------
// Resource-usage traces

struct TraceSeries {
  std::string name;
  std::vector<double> cpu_ghz;
  std::vector<double> mem_gb;
  std::vector<double> net_mbps;

  std::size_t size() const { return cpu_ghz.size(); }
};

struct TraceIngest {
  TraceSeries series;
  std::size_t skipped_rows = 0;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

// Column whose lowercased header contains `key`; when several match, one that
// also contains `prefer` wins.
inline std::size_t find_column(const std::vector<std::string_view>& header, std::string_view key,
                               std::string_view prefer) {
  std::size_t found = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto h = lower(header[i]);
    if (h.find(key) == std::string::npos) continue;
    if (found == header.size()) found = i;
    if (h.find(prefer) != std::string::npos) return i;
  }
  if (found == header.size()) throw DataError("trace: missing required column '" + std::string(key) + "'");
  return found;
}

}  // namespace detail

/// Parses a delimiter-separated resource trace (Bitbrains-style header). CPU MHz
/// becomes GHz, memory KB becomes GB, network KB/s becomes MBps.
inline TraceIngest ingest_trace_text(std::string_view text, std::string name = "trace") {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!detail::trim(line).empty()) lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (lines.empty()) throw DataError("trace: empty file");

  const std::string_view header_line = lines.front();
  char delim = '\t';
  if (header_line.find(';') != std::string_view::npos)
    delim = ';';
  else if (header_line.find(',') != std::string_view::npos)
    delim = ',';
  auto header = detail::split(header_line, delim);
  const auto cpu_col = detail::find_column(header, "cpu usage", "mhz");
  const auto mem_col = detail::find_column(header, "memory usage", "kb");
  const auto net_col = detail::find_column(header, "network transmitted", "kb");

  TraceIngest out;
  out.series.name = std::move(name);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = detail::split(lines[r], delim);
    double cpu = 0, mem = 0, net = 0;
    const auto need = std::max({cpu_col, mem_col, net_col});
    if (fields.size() <= need || !detail::parse_number(fields[cpu_col], cpu) ||
        !detail::parse_number(fields[mem_col], mem) || !detail::parse_number(fields[net_col], net) || cpu < 0 ||
        mem < 0 || net < 0) {
      ++out.skipped_rows;
      continue;
    }
    out.series.cpu_ghz.push_back(cpu / 1000.0);
    out.series.mem_gb.push_back(mem / (1024.0 * 1024.0));
    out.series.net_mbps.push_back(net / 1024.0);
  }
  if (out.series.size() == 0) throw DataError("trace: every data row was skipped");
  return out;
}

inline TraceIngest ingest_trace(const std::string& path) { return ingest_trace_text(read_file(path), path); }

// ---------------------------------------------------------------------------
// SFC generation

enum class DemandMode { synthetic, trace };
enum class ChainShape { linear, branching };

/// Sinusoid-plus-noise demand model. Each entity draws a base level in [lo, hi]
/// per dimension, oscillates by +/- swing * base with a period in
/// [period_lo, period_hi] slots, plus uniform noise of +/- noise * base.
/// size_coupling mixes a shared per-VNF size draw into CPU and memory bases.
struct SyntheticDemandConfig {
  double cpu_lo = 0.05, cpu_hi = 0.45;
  double mem_lo = 0.1, mem_hi = 0.9;
  double bw_lo = 0.005, bw_hi = 0.06;
  double swing = 0.3;
  double noise = 0.1;
  int period_lo = 20, period_hi = 100;
  double size_coupling = 0.5;
};

struct WorkloadConfig {
  int min_chain = 2, max_chain = 5;
  ChainShape shape = ChainShape::linear;
  double arrival_rate = 10.0;
  DemandMode mode = DemandMode::synthetic;
  int min_lifetime = 1, max_lifetime = 100;
  double min_latency_ms = 20.0, max_latency_ms = 50.0;
  double min_processing_ms = 1.0, max_processing_ms = 5.0;
  SyntheticDemandConfig synthetic;
  double trace_cpu_scale = 1.0, trace_mem_scale = 1.0, trace_bw_scale = 1.0;

  void validate() const {
    if (min_chain < 1 || max_chain < min_chain) throw ConfigError("workload: invalid chain length range");
    if (!(arrival_rate > 0)) throw ConfigError("workload: arrival rate must be > 0");
    if (min_lifetime < 1 || max_lifetime < min_lifetime) throw ConfigError("workload: invalid lifetime range");
    if (!(min_latency_ms > 0) || max_latency_ms < min_latency_ms) throw ConfigError("workload: invalid latency range");
    if (min_processing_ms < 0 || max_processing_ms < min_processing_ms)
      throw ConfigError("workload: invalid processing delay range");
    const auto& s = synthetic;
    if (s.cpu_lo < 0 || s.cpu_hi < s.cpu_lo || s.mem_lo < 0 || s.mem_hi < s.mem_lo || s.bw_lo < 0 || s.bw_hi < s.bw_lo)
      throw ConfigError("workload: invalid synthetic demand ranges");
    if (s.period_lo < 1 || s.period_hi < s.period_lo) throw ConfigError("workload: invalid synthetic period range");
  }
};

NLOHMANN_JSON_SERIALIZE_ENUM(DemandMode, {{DemandMode::synthetic, "synthetic"}, {DemandMode::trace, "trace"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ChainShape, {{ChainShape::linear, "linear"}, {ChainShape::branching, "branching"}})
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SyntheticDemandConfig, cpu_lo, cpu_hi, mem_lo, mem_hi, bw_lo, bw_hi,
                                                swing, noise, period_lo, period_hi, size_coupling)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(WorkloadConfig, min_chain, max_chain, shape, arrival_rate, mode,
                                                min_lifetime, max_lifetime, min_latency_ms, max_latency_ms,
                                                min_processing_ms, max_processing_ms, synthetic, trace_cpu_scale,
                                                trace_mem_scale, trace_bw_scale)

namespace detail {

inline double uniform(Rng& rng, double lo, double hi) {
  if (hi <= lo) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct Oscillation {
  double base, period, phase;
};

inline std::vector<double> oscillate(Rng& rng, const Oscillation& osc, const SyntheticDemandConfig& cfg,
                                     std::size_t length) {
  std::vector<double> out(length);
  for (std::size_t t = 0; t < length; ++t) {
    double wave = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / osc.period + osc.phase);
    double jitter = uniform(rng, -1.0, 1.0);
    out[t] = std::max(0.0, osc.base * (1.0 + cfg.swing * wave + cfg.noise * jitter));
  }
  return out;
}

}  // namespace detail

/// Draws one SFC arriving at slot t. Deterministic in the state of rng.
inline SfcRequest generate_sfc(Rng& rng, const WorkloadConfig& cfg, int t, SfcId id,
                               const std::vector<TraceSeries>& traces = {}) {
  if (cfg.mode == DemandMode::trace && traces.empty()) throw ConfigError("workload: trace mode needs at least one trace");
  SfcRequest sfc;
  sfc.id = id;
  sfc.arrival = t;
  sfc.lifetime = detail::uniform_int(rng, cfg.min_lifetime, cfg.max_lifetime);
  sfc.latency_limit_ms = detail::uniform(rng, cfg.min_latency_ms, cfg.max_latency_ms);
  const int length = detail::uniform_int(rng, cfg.min_chain, cfg.max_chain);
  const auto samples = static_cast<std::size_t>(sfc.lifetime);
  const auto& syn = cfg.synthetic;

  auto synthetic_osc = [&](double lo, double hi, double u) {
    return detail::Oscillation{lo + u * (hi - lo), static_cast<double>(detail::uniform_int(rng, syn.period_lo, syn.period_hi)),
                               detail::uniform(rng, 0.0, 2.0 * std::numbers::pi)};
  };
  auto coupled = [&](double shared) {
    return syn.size_coupling * shared + (1.0 - syn.size_coupling) * detail::uniform(rng, 0.0, 1.0);
  };

  for (int i = 0; i < length; ++i) {
    Vnf v;
    v.id = static_cast<std::uint32_t>(i);
    v.owner = id;
    v.start_slot = t;
    v.processing_delay_ms = detail::uniform(rng, cfg.min_processing_ms, cfg.max_processing_ms);
    v.demand.samples.resize(samples);
    if (cfg.mode == DemandMode::synthetic) {
      const double shared = detail::uniform(rng, 0.0, 1.0);
      auto cpu_osc = synthetic_osc(syn.cpu_lo, syn.cpu_hi, coupled(shared));
      auto mem_osc = synthetic_osc(syn.mem_lo, syn.mem_hi, coupled(shared));
      auto cpu = detail::oscillate(rng, cpu_osc, syn, samples);
      auto mem = detail::oscillate(rng, mem_osc, syn, samples);
      for (std::size_t s = 0; s < samples; ++s) v.demand.samples[s] = {cpu[s], mem[s]};
    } else {
      const auto& tr = traces[static_cast<std::size_t>(detail::uniform_int(rng, 0, static_cast<int>(traces.size()) - 1))];
      const auto start = static_cast<std::size_t>(detail::uniform_int(rng, 0, static_cast<int>(tr.size()) - 1));
      for (std::size_t s = 0; s < samples; ++s) {
        const auto k = (start + s) % tr.size();
        v.demand.samples[s] = {tr.cpu_ghz[k] * cfg.trace_cpu_scale, tr.mem_gb[k] * cfg.trace_mem_scale};
      }
    }
    sfc.vnfs.push_back(std::move(v));
  }

  for (int i = 1; i < length; ++i) {
    VnfLink l;
    l.id = static_cast<std::uint32_t>(i - 1);
    l.dst = static_cast<std::uint32_t>(i);
    l.src = cfg.shape == ChainShape::linear ? static_cast<std::uint32_t>(i - 1)
                                            : static_cast<std::uint32_t>(detail::uniform_int(rng, 0, i - 1));
    l.start_slot = t;
    l.deadline_ms = sfc.latency_limit_ms;
    l.demand.samples.resize(samples);
    if (cfg.mode == DemandMode::synthetic) {
      auto osc = synthetic_osc(syn.bw_lo, syn.bw_hi, detail::uniform(rng, 0.0, 1.0));
      auto bw = detail::oscillate(rng, osc, syn, samples);
      for (std::size_t s = 0; s < samples; ++s) l.demand.samples[s] = {bw[s]};
    } else {
      const auto& tr = traces[static_cast<std::size_t>(detail::uniform_int(rng, 0, static_cast<int>(traces.size()) - 1))];
      const auto start = static_cast<std::size_t>(detail::uniform_int(rng, 0, static_cast<int>(tr.size()) - 1));
      for (std::size_t s = 0; s < samples; ++s) l.demand.samples[s] = {tr.net_mbps[(start + s) % tr.size()] * cfg.trace_bw_scale};
    }
    sfc.links.push_back(std::move(l));
  }
  return sfc;
}

/// Seeded stream of SFC arrivals: Poisson(arrival_rate) requests per slot.
class WorkloadGenerator {
 public:
  WorkloadGenerator(WorkloadConfig cfg, std::uint64_t seed, std::vector<TraceSeries> traces = {})
      : cfg_(std::move(cfg)), rng_(seed), traces_(std::move(traces)) {
    cfg_.validate();
  }

  std::vector<SfcRequest> arrivals(int t) {
    std::poisson_distribution<int> count(cfg_.arrival_rate);
    const int n = count(rng_);
    std::vector<SfcRequest> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(generate_sfc(rng_, cfg_, t, next_id_++, traces_));
    return out;
  }

  const WorkloadConfig& config() const { return cfg_; }

 private:
  WorkloadConfig cfg_;
  Rng rng_;
  std::vector<TraceSeries> traces_;
  SfcId next_id_ = 0;
};

}  // namespace fragmig
