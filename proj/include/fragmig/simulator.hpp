#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "fragmig/common.hpp"
#include "fragmig/correlation.hpp"
#include "fragmig/dataset.hpp"
#include "fragmig/fragmentation.hpp"
#include "fragmig/migration.hpp"
#include "fragmig/mhgat.hpp"
#include "fragmig/nsfnet.hpp"
#include "fragmig/state.hpp"
#include "fragmig/topology.hpp"
#include "fragmig/workload.hpp"

namespace fragmig {

struct SimConfig {
  std::string topology = "nsfnet";  // "nsfnet" or a topology JSON file
  WorkloadConfig workload;
  std::vector<std::string> traces;  // demand trace files (trace mode)
  std::uint64_t seed = 1;
  double rho = 0.5;
  double gamma = 0.9;
  double q = 0.5;
  std::size_t K = 2;
  std::size_t zeta = 5;
  int horizon = 1000;
  int warmup = 100;  // leading slots excluded from summary metrics
  PolicyKind policy = PolicyKind::greedy;
  double bandwidth_mbps = 1.0;
  std::size_t path_max_hops = PathTable::kDefaultMaxHops;
  std::size_t path_cap = PathTable::kDefaultPerPairCap;
  double cpu_scale = 1.0, mem_scale = 1.0, bw_scale = 1.0;
  std::string model;  // checkpoint path for the mhgat policy

  void validate() const {
    workload.validate();
    if (horizon < 1) throw ConfigError("simulate: horizon must be >= 1");
    if (warmup < 0 || warmup >= horizon) throw ConfigError("simulate: warmup must lie in [0, horizon)");
    if (!(gamma >= 0 && gamma <= 1)) throw ConfigError("simulate: gamma must lie in [0, 1]");
    if (!(rho > 0 && rho <= 1)) throw ConfigError("simulate: rho must lie in (0, 1]");
    if (zeta < 1) throw ConfigError("simulate: zeta must be >= 1");
    if (!(bandwidth_mbps > 0)) throw ConfigError("simulate: migration bandwidth must be > 0");
    if (!(cpu_scale > 0 && mem_scale > 0 && bw_scale > 0)) throw ConfigError("simulate: capacity scales must be > 0");
    FragParams{K, q}.validate();
    if (workload.mode == DemandMode::trace && traces.empty())
      throw ConfigError("simulate: trace demand mode requires at least one trace file");
  }

  FragParams frag() const { return {K, q}; }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimConfig, topology, workload, traces, seed, rho, gamma, q, K, zeta,
                                                horizon, warmup, policy, bandwidth_mbps, path_max_hops, path_cap,
                                                cpu_scale, mem_scale, bw_scale, model)

/// Deterministic derived seed for sub-stream `stream` (SplitMix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Network resolve_topology(const std::string& source) {
  if (source == "nsfnet") return nsfnet();
  return parse_topology(read_file(source));
}

/// Network plus the per-topology tables built from it. Not movable: the tables
/// keep a pointer to the network.
class World {
 public:
  World(Network net, std::size_t max_field, std::size_t max_hops, std::size_t cap)
      : net_(std::move(net)), table_(net_, max_hops, cap), frag_(net_, max_field) {}
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  const Network& net() const { return net_; }
  const PathTable& table() const { return table_; }
  const FragmentationContext& frag() const { return frag_; }

 private:
  Network net_;
  PathTable table_;
  FragmentationContext frag_;
};

inline std::unique_ptr<World> make_world(const SimConfig& cfg) {
  auto net = scale_capacities(resolve_topology(cfg.topology), cfg.cpu_scale, cfg.mem_scale, cfg.bw_scale);
  return std::make_unique<World>(std::move(net), cfg.K, cfg.path_max_hops, cfg.path_cap);
}

inline std::vector<TraceSeries> load_traces(const std::vector<std::string>& paths) {
  std::vector<TraceSeries> out;
  for (const auto& p : paths) out.push_back(ingest_trace(p).series);
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct SlotRecord {
  int slot = 0;
  int arrivals = 0, accepted = 0;
  std::size_t released = 0;
  std::size_t active = 0;
  bool triggered = false;  // overload detected before the migration pass
  std::size_t overloaded_nodes = 0, overloaded_links = 0;  // after the migration pass
  std::size_t migrations = 0, failures = 0, reroutes = 0;
  double fragmentation = 0;  // network maximum level
  double loss = 0;
  LoadMetrics load;
  double round_ms = 0;  // wall time of the migration pass (timing output only)

  bool overloaded() const { return overloaded_nodes + overloaded_links > 0; }
};

struct SlotEvent {
  int slot = 0;
  MigrationEvent event;
};

struct SimSummary {
  int slots = 0;  // counted (post-warmup) slots
  int warmup = 0;
  long arrivals = 0, accepted = 0;
  double acceptance_ratio = 0;
  double overload_ratio = 0;
  double total_loss = 0;
  double mean_fragmentation = 0;
  double objective = 0;
  long rounds = 0;
  long migrations = 0;
  double mean_post_round_fragmentation = 0;
  LoadMetrics mean_load;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(LoadMetrics, avr_max_util, avr_var, avr_frag, max_max_util, max_var, max_frag)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SimSummary, slots, warmup, arrivals, accepted, acceptance_ratio, overload_ratio,
                                   total_loss, mean_fragmentation, objective, rounds, migrations,
                                   mean_post_round_fragmentation, mean_load)

struct MetricsLog {
  std::vector<SlotRecord> slots;
  std::vector<SlotEvent> events;
  SimSummary summary;
};

/// Summary over slots with index >= warmup; objective is gamma * sum F + (1 - gamma) * sum L.
inline SimSummary summarize(const std::vector<SlotRecord>& slots, int warmup, double gamma,
                            const std::vector<double>& post_round_levels = {}) {
  SimSummary s;
  s.warmup = warmup;
  double sum_f = 0, sum_l = 0;
  std::array<double, 6> load{};
  int overloaded = 0;
  for (const auto& r : slots) {
    if (r.slot < warmup) continue;
    ++s.slots;
    s.arrivals += r.arrivals;
    s.accepted += r.accepted;
    overloaded += r.overloaded() ? 1 : 0;
    sum_f += r.fragmentation;
    sum_l += r.loss;
    s.rounds += r.triggered ? 1 : 0;
    s.migrations += static_cast<long>(r.migrations);
    auto v = r.load.values();
    for (std::size_t i = 0; i < v.size(); ++i) load[i] += v[i];
  }
  if (s.slots > 0) {
    const double n = s.slots;
    s.acceptance_ratio = s.arrivals ? static_cast<double>(s.accepted) / static_cast<double>(s.arrivals) : 1.0;
    s.overload_ratio = overloaded / n;
    s.mean_fragmentation = sum_f / n;
    s.mean_load = {load[0] / n, load[1] / n, load[2] / n, load[3] / n, load[4] / n, load[5] / n};
  }
  s.total_loss = sum_l;
  s.objective = gamma * sum_f + (1 - gamma) * sum_l;
  if (!post_round_levels.empty())
    s.mean_post_round_fragmentation =
        std::accumulate(post_round_levels.begin(), post_round_levels.end(), 0.0) / static_cast<double>(post_round_levels.size());
  return s;
}

struct SimHooks {
  DecisionObserver observer;
  std::function<bool()> stop;  // checked after every slot
};

/// Slot order: advance demands, release expired SFCs, deploy Poisson arrivals,
/// detect overloads, run one migration round if any, re-detect, log metrics.
inline MetricsLog run_simulation(const SimConfig& cfg, const World& world, const MigrationPolicy& policy,
                                 const std::vector<TraceSeries>& traces = {}, const SimHooks& hooks = {}) {
  cfg.validate();
  const Network& net = world.net();
  NetworkState state(net);
  WorkloadGenerator gen(cfg.workload, cfg.seed, traces);
  MigrationEnv env{net, world.table(), world.frag(), {cfg.rho, cfg.zeta, cfg.bandwidth_mbps, cfg.frag()}};
  MetricsLog log;
  std::vector<double> post_round;
  for (int t = 0; t < cfg.horizon; ++t) {
    SlotRecord rec;
    rec.slot = t;
    state.set_clock(t);
    rec.released = state.release_expired(t);
    for (const auto& sfc : gen.arrivals(t)) {
      ++rec.arrivals;
      if (deploy_sfc(state, sfc, world.table(), cfg.rho).accepted) ++rec.accepted;
    }
    if (!detect_overloads(state, cfg.rho).empty()) {
      rec.triggered = true;
      const auto start = std::chrono::steady_clock::now();
      auto out = run_migration_round(state, env, policy, hooks.observer);
      rec.round_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      rec.migrations = out.actions.size();
      rec.reroutes = out.reroutes;
      rec.loss = out.total_loss;
      for (const auto& e : out.events) {
        if (e.kind == EventKind::failed || e.kind == EventKind::reroute_failed) ++rec.failures;
        log.events.push_back({t, e});
      }
      if (t >= cfg.warmup) post_round.push_back(out.post_fragmentation);
    }
    const auto post = detect_overloads(state, cfg.rho);
    rec.overloaded_nodes = post.nodes.size();
    rec.overloaded_links = post.links.size();
    rec.active = state.active().size();
    const auto snap = state.snapshot();
    const auto report = fragmentation_report(world.frag(), snap, cfg.frag(), t);
    rec.fragmentation = report.network_max;
    rec.load = load_metric_suite(utilization_ratios(net, snap), report.node_levels);
    log.slots.push_back(rec);
    if (hooks.stop && hooks.stop()) break;
  }
  log.summary = summarize(log.slots, cfg.warmup, cfg.gamma, post_round);
  return log;
}

inline MigrationPolicy make_policy(const SimConfig& cfg, const Network& net,
                                   std::shared_ptr<const MhgatModel> model = nullptr) {
  switch (cfg.policy) {
    case PolicyKind::greedy: return MigrationPolicy::greedy();
    case PolicyKind::oracle: return MigrationPolicy::oracle();
    case PolicyKind::mhgat:
      if (!model) {
        if (cfg.model.empty()) throw ConfigError("policy mhgat requires a model checkpoint");
        model = std::make_shared<MhgatModel>(load_checkpoint(nlohmann::json::parse(read_file(cfg.model)), net));
      }
      return MigrationPolicy::mhgat(std::move(model));
  }
  throw ConfigError("unknown policy");
}

inline MetricsLog run_simulation(const SimConfig& cfg, std::shared_ptr<const MhgatModel> model = nullptr) {
  cfg.validate();
  auto world = make_world(cfg);
  return run_simulation(cfg, *world, make_policy(cfg, world->net(), std::move(model)), load_traces(cfg.traces));
}

// ---------------------------------------------------------------------------
// Dataset generation

struct DatasetGenResult {
  std::vector<DatasetRecord> records;
  std::size_t runs = 0;
  std::size_t duplicates = 0;
  bool partial = false;
};

/// Runs the lifecycle with the oracle resolving every overload and records one
/// labeled example per selected VNF. Run r uses seed derive_seed(seed, r);
/// duplicate input tensors are dropped.
inline DatasetGenResult generate_dataset(const SimConfig& base, std::size_t target, std::size_t max_runs = 100,
                                         bool average_edge_demand = false) {
  if (target < 1) throw ConfigError("gen-dataset: target must be >= 1");
  base.validate();
  auto world = make_world(base);
  const auto traces = load_traces(base.traces);
  const std::string topo = hex64(world->net().structure_fingerprint());
  DatasetGenResult res;
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t run = 0; run < max_runs && res.records.size() < target; ++run) {
    SimConfig cfg = base;
    cfg.seed = derive_seed(base.seed, run);
    cfg.policy = PolicyKind::oracle;
    SimHooks hooks;
    hooks.observer = [&](const NetworkState& state, VnfRef v, NodeId n, const Decision& d) {
      if (res.records.size() >= target) return;
      DatasetRecord r;
      r.node_features = build_node_features(state, v);
      r.edge_features = build_edge_features(state, v, average_edge_demand);
      r.labels = d.labels;
      r.topology = topo;
      r.run_seed = cfg.seed;
      r.slot = state.clock();
      r.vnf = v;
      r.source = n;
      if (!seen.insert(r.tensor_hash()).second) {
        ++res.duplicates;
        return;
      }
      res.records.push_back(std::move(r));
    };
    hooks.stop = [&] { return res.records.size() >= target; };
    run_simulation(cfg, *world, MigrationPolicy::oracle(), traces, hooks);
    ++res.runs;
  }
  res.partial = res.records.size() < target;
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParameter { arrival_rate, cpu_scale, mem_scale, bw_scale };

inline SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "lambda" || s == "arrival-rate") return SweepParameter::arrival_rate;
  if (s == "cpu-scale") return SweepParameter::cpu_scale;
  if (s == "mem-scale") return SweepParameter::mem_scale;
  if (s == "bw-scale") return SweepParameter::bw_scale;
  throw ConfigError("unknown sweep parameter '" + s + "' (expected lambda, cpu-scale, mem-scale or bw-scale)");
}

inline std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::arrival_rate: return "lambda";
    case SweepParameter::cpu_scale: return "cpu-scale";
    case SweepParameter::mem_scale: return "mem-scale";
    case SweepParameter::bw_scale: return "bw-scale";
  }
  return "?";
}

inline SimConfig with_parameter(SimConfig cfg, SweepParameter p, double value) {
  switch (p) {
    case SweepParameter::arrival_rate: cfg.workload.arrival_rate = value; break;
    case SweepParameter::cpu_scale: cfg.cpu_scale = value; break;
    case SweepParameter::mem_scale: cfg.mem_scale = value; break;
    case SweepParameter::bw_scale: cfg.bw_scale = value; break;
  }
  return cfg;
}

struct SweepCell {
  double value = 0;
  std::uint64_t seed = 0;
  PolicyKind policy = PolicyKind::greedy;
  SimSummary summary;
};

/// Cross product of values x seeds x policies, in that nesting order.
inline std::vector<SweepCell> run_sweep(const SimConfig& base, SweepParameter p, const std::vector<double>& values,
                                        const std::vector<std::uint64_t>& seeds, const std::vector<PolicyKind>& policies,
                                        std::shared_ptr<const MhgatModel> model = nullptr) {
  if (values.empty() || seeds.empty() || policies.empty()) throw ConfigError("sweep: empty value, seed or policy list");
  std::vector<SweepCell> cells;
  const auto traces = load_traces(base.traces);
  for (double v : values) {
    SimConfig cfg = with_parameter(base, p, v);
    cfg.validate();
    auto world = make_world(cfg);
    for (auto seed : seeds)
      for (auto pol : policies) {
        cfg.seed = seed;
        cfg.policy = pol;
        auto log = run_simulation(cfg, *world, make_policy(cfg, world->net(), model), traces);
        cells.push_back({v, seed, pol, log.summary});
      }
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Correlation of load metrics with the overload ratio

struct CorrelationPoint {
  double lambda = 0;
  std::uint64_t seed = 0;
  double overload_ratio = 0;
  LoadMetrics mean_load;
};

struct CorrelationStudy {
  std::vector<CorrelationPoint> points;
  // coefficient[metric][method], metrics in LoadMetrics::kNames order
  std::array<std::array<double, 4>, 6> coefficient{};
};

/// One run per (lambda, seed); each run contributes its overload ratio and its
/// time-averaged load metrics. Coefficients are taken across runs.
inline CorrelationStudy analyze_fragmentation(const SimConfig& base, const std::vector<double>& lambdas,
                                              const std::vector<std::uint64_t>& seeds) {
  CorrelationStudy study;
  auto cells = run_sweep(base, SweepParameter::arrival_rate, lambdas, seeds, {base.policy});
  std::vector<double> over;
  std::array<std::vector<double>, 6> metric;
  for (const auto& c : cells) {
    study.points.push_back({c.value, c.seed, c.summary.overload_ratio, c.summary.mean_load});
    over.push_back(c.summary.overload_ratio);
    auto v = c.summary.mean_load.values();
    for (std::size_t i = 0; i < 6; ++i) metric[i].push_back(v[i]);
  }
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t m = 0; m < kCorrelationMethods.size(); ++m)
      study.coefficient[i][m] = correlate(metric[i], over, kCorrelationMethods[m]);
  return study;
}

// ---------------------------------------------------------------------------
// Decision runtime on complete graphs

struct RuntimeRow {
  std::size_t nodes = 0;
  PolicyKind policy = PolicyKind::greedy;
  double median_ms = 0, min_ms = 0, max_ms = 0;
  std::size_t trials = 0;
  VnfRef vnf;
  std::optional<NodeId> destination;
};

/// Loaded state on K_n with at least one overloaded node: SFCs are deployed
/// with a unit threshold until some node exceeds rho.
inline NetworkState overloaded_state(const World& world, double rho, std::uint64_t seed) {
  NetworkState state(world.net());
  WorkloadConfig wl;
  wl.min_lifetime = wl.max_lifetime = 1000;
  WorkloadGenerator gen(wl, seed);
  state.set_clock(0);
  for (int guard = 0; guard < 10000; ++guard) {
    for (const auto& sfc : gen.arrivals(0)) deploy_sfc(state, sfc, world.table(), 1.0);
    if (!detect_overloads(state, rho).nodes.empty()) return state;
  }
  throw InvariantError("bench: could not construct an overloaded state");
}

/// Times one decision (VNF selection plus destination choice) per policy.
inline std::vector<RuntimeRow> benchmark_runtime(const std::vector<std::size_t>& sizes, std::size_t trials,
                                                 std::uint64_t seed, const MigrationConfig& mcfg = {}) {
  if (trials < 1) throw ConfigError("bench-runtime: trials must be >= 1");
  std::vector<RuntimeRow> rows;
  for (std::size_t n : sizes) {
    if (n < 2) throw ConfigError("bench-runtime: node counts must be >= 2");
    World world(complete_graph(n, {32.0, 64.0}, {5.0}, 1.0), mcfg.frag.max_field, 3, PathTable::kDefaultPerPairCap);
    auto state = overloaded_state(world, mcfg.rho, derive_seed(seed, n));
    const NodeId node = detect_overloads(state, mcfg.rho).nodes.front().node;
    auto model = std::make_shared<MhgatModel>(MhgatModel::create(world.net(), {}, derive_seed(seed, 1000 + n)));
    MigrationEnv env{world.net(), world.table(), world.frag(), mcfg};
    for (auto kind : {PolicyKind::greedy, PolicyKind::oracle, PolicyKind::mhgat}) {
      auto policy = kind == PolicyKind::mhgat ? MigrationPolicy::mhgat(model)
                                              : (kind == PolicyKind::oracle ? MigrationPolicy::oracle() : MigrationPolicy::greedy());
      RuntimeRow row;
      row.nodes = n;
      row.policy = kind;
      row.trials = trials;
      std::vector<double> ms;
      for (std::size_t t = 0; t < trials; ++t) {
        const auto start = std::chrono::steady_clock::now();
        const std::size_t j = worst_node_resource(state, node);
        auto v = select_for_policy(state, policy, node, j, mcfg.rho, {});
        Decision d = decide(state, env, policy, *v, j);
        ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
        row.vnf = *v;
        row.destination = d.action ? std::optional<NodeId>(d.action->to) : std::nullopt;
      }
      std::sort(ms.begin(), ms.end());
      row.median_ms = ms.size() % 2 ? ms[ms.size() / 2] : 0.5 * (ms[ms.size() / 2 - 1] + ms[ms.size() / 2]);
      row.min_ms = ms.front();
      row.max_ms = ms.back();
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace fragmig
