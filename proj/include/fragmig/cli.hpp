#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fragmig/common.hpp"
#include "fragmig/dataset.hpp"
#include "fragmig/mhgat.hpp"
#include "fragmig/report.hpp"
#include "fragmig/simulator.hpp"
#include "fragmig/training.hpp"

namespace fragmig::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Logging (FRAGMIG_LOG = quiet | info | debug)

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  const char* v = std::getenv("FRAGMIG_LOG");
  if (!v) return LogLevel::info;
  const std::string s(v);
  if (s == "quiet" || s == "0") return LogLevel::quiet;
  if (s == "debug" || s == "2") return LogLevel::debug;
  return LogLevel::info;
}

inline void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << "[fragmig] " << msg << '\n';
}

// ---------------------------------------------------------------------------
// Output directory with an exclusive lock file

inline constexpr const char* kLockName = ".fragmig.lock";
inline constexpr const char* kManifestName = "manifest.json";

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    lock_ = dir_ / kLockName;
    std::FILE* f = std::fopen(lock_.string().c_str(), "wx");
    if (!f) throw ConfigError("output directory " + dir_.string() + " is locked by another run (remove " + lock_.string() + " if stale)");
    std::fclose(f);
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;
  ~OutputDir() {
    std::error_code ec;
    fs::remove(lock_, ec);
  }

  void write(const std::string& name, const std::string& text, bool timing = false) {
    const fs::path p = dir_ / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_text(p.string(), text);
    (timing ? timing_ : outputs_).push_back(name);
  }
  void write(const std::string& name, const CsvTable& t, bool timing = false) { write(name, to_csv(t), timing); }

  const fs::path& path() const { return dir_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  const std::vector<std::string>& timing_outputs() const { return timing_; }

 private:
  fs::path dir_;
  fs::path lock_;
  std::vector<std::string> outputs_;
  std::vector<std::string> timing_;
};

// ---------------------------------------------------------------------------
// Resolved configurations

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"simulate", "gen-dataset", "train",        "eval",
                                             "sweep",    "analyze-frag", "bench-runtime"};
  return s;
}

inline json default_config(const std::string& sub) {
  if (sub == "simulate") return json(SimConfig{});
  if (sub == "gen-dataset")
    return {{"sim", SimConfig{}}, {"records", 5000}, {"max_runs", 100}, {"average_edge_demand", false}};
  if (sub == "train")
    return {{"dataset", ""}, {"topology", "nsfnet"}, {"train", TrainConfig{}}, {"model", MhgatConfig{}}, {"init_seed", 1}};
  if (sub == "eval") return {{"model", ""}, {"dataset", ""}, {"topology", "nsfnet"}};
  if (sub == "sweep") {
    SimConfig sim;
    return {{"sim", sim},
            {"parameter", "lambda"},
            {"values", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
            {"seeds", {1, 2, 3}},
            {"policies", {"greedy", "oracle"}}};
  }
  if (sub == "analyze-frag")
    return {{"sim", SimConfig{}}, {"lambdas", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}, {"seeds", {1, 2, 3}}};
  if (sub == "bench-runtime")
    return {{"sizes", {4, 6, 8, 10, 12, 14, 16}}, {"trials", 20}, {"seed", 1}, {"rho", 0.5}, {"K", 2}};
  throw ConfigError("unknown subcommand '" + sub + "'");
}

/// JSON pointers that receive the global --seed per subcommand.
inline std::vector<std::string> seed_targets(const std::string& sub) {
  if (sub == "simulate") return {"/seed"};
  if (sub == "gen-dataset" || sub == "sweep" || sub == "analyze-frag") return {"/sim/seed"};
  if (sub == "train") return {"/train/seed", "/init_seed"};
  if (sub == "bench-runtime") return {"/seed"};
  return {};
}

/// Input files named by a resolved configuration, for hashing into the manifest.
inline std::vector<std::string> input_files(const std::string& sub, const json& cfg) {
  std::vector<std::string> files;
  auto add_sim = [&](const json& sim) {
    if (sim.at("topology").get<std::string>() != "nsfnet") files.push_back(sim.at("topology").get<std::string>());
    for (const auto& t : sim.at("traces")) files.push_back(t.get<std::string>());
    if (!sim.at("model").get<std::string>().empty()) files.push_back(sim.at("model").get<std::string>());
  };
  if (sub == "simulate") add_sim(cfg);
  if (sub == "gen-dataset" || sub == "sweep" || sub == "analyze-frag") add_sim(cfg.at("sim"));
  if (sub == "train" || sub == "eval") {
    if (cfg.at("topology").get<std::string>() != "nsfnet") files.push_back(cfg.at("topology").get<std::string>());
    if (!cfg.at("dataset").get<std::string>().empty()) files.push_back(cfg.at("dataset").get<std::string>());
  }
  if (sub == "eval" && !cfg.at("model").get<std::string>().empty()) files.push_back(cfg.at("model").get<std::string>());
  return files;
}

// ---------------------------------------------------------------------------
// Subcommand bodies

inline std::vector<PolicyKind> parse_policies(const json& j) {
  std::vector<PolicyKind> out;
  for (const auto& p : j) out.push_back(parse_policy(p.get<std::string>()));
  return out;
}

inline std::shared_ptr<const MhgatModel> maybe_model(const SimConfig& sim, const Network& net,
                                                     const std::vector<PolicyKind>& policies) {
  if (std::find(policies.begin(), policies.end(), PolicyKind::mhgat) == policies.end()) return nullptr;
  if (sim.model.empty()) throw ConfigError("policy mhgat requires --model");
  return std::make_shared<MhgatModel>(load_checkpoint(json::parse(read_file(sim.model)), net));
}

inline void cmd_simulate(const json& cfg, OutputDir& out) {
  const auto sim = cfg.get<SimConfig>();
  sim.validate();
  auto world = make_world(sim);
  auto model = maybe_model(sim, world->net(), {sim.policy});
  log(LogLevel::info, "simulate: policy " + to_string(sim.policy) + ", horizon " + std::to_string(sim.horizon));
  auto log_ = run_simulation(sim, *world, make_policy(sim, world->net(), model), load_traces(sim.traces));
  out.write("metrics.csv", metrics_table(log_));
  out.write("events.csv", events_table(log_));
  out.write("summary.json", json{{"summary", log_.summary}, {"warmup_slots_discarded", sim.warmup}}.dump(2) + "\n");
  out.write("timing.csv", timing_table(log_), true);
}

inline void cmd_gen_dataset(const json& cfg, OutputDir& out) {
  const auto sim = cfg.at("sim").get<SimConfig>();
  const auto target = cfg.at("records").get<std::size_t>();
  auto res = generate_dataset(sim, target, cfg.at("max_runs").get<std::size_t>(), cfg.at("average_edge_demand").get<bool>());
  if (res.partial)
    log(LogLevel::info, "gen-dataset: warning: only " + std::to_string(res.records.size()) + " of " +
                            std::to_string(target) + " records after " + std::to_string(res.runs) + " runs");
  std::ostringstream os;
  write_jsonl(os, res.records);
  out.write("dataset.jsonl", os.str());
  out.write("dataset_summary.json", json{{"records", res.records.size()},
                                         {"target", target},
                                         {"runs", res.runs},
                                         {"duplicates_dropped", res.duplicates},
                                         {"partial", res.partial}}
                                        .dump(2) + "\n");
}

inline void cmd_train(const json& cfg, OutputDir& out) {
  const auto dataset_path = cfg.at("dataset").get<std::string>();
  if (dataset_path.empty()) throw ConfigError("train requires --dataset");
  const Network net = resolve_topology(cfg.at("topology").get<std::string>());
  auto records = load_dataset(dataset_path);
  const std::string topo = hex64(net.structure_fingerprint());
  for (const auto& r : records)
    if (r.topology != topo) throw DataError("train: dataset record topology " + r.topology + " differs from " + topo);
  const auto tcfg = cfg.at("train").get<TrainConfig>();
  auto init = MhgatModel::create(net, cfg.at("model").get<MhgatConfig>(), cfg.at("init_seed").get<std::uint64_t>());
  log(LogLevel::info, "train: " + std::to_string(records.size()) + " records");
  auto res = train(std::move(init), records, tcfg);
  json hyper = {{"train", tcfg},
                {"init_seed", cfg.at("init_seed")},
                {"best_epoch", res.best_epoch},
                {"best_val_mse", res.best_val_mse},
                {"test_mse", res.test_mse}};
  out.write("model.json", save_checkpoint(res.model, hyper).dump() + "\n");
  out.write("training_log.csv", training_table(res));
  out.write("training_timing.csv", training_timing_table(res), true);
  out.write("train_summary.json", json{{"records", records.size()},
                                       {"train", res.split.train.size()},
                                       {"val", res.split.val.size()},
                                       {"test", res.split.test.size()},
                                       {"epochs", res.curve.size()},
                                       {"best_epoch", res.best_epoch},
                                       {"best_val_mse", res.best_val_mse},
                                       {"test_mse", res.test_mse}}
                                      .dump(2) + "\n");
}

inline void cmd_eval(const json& cfg, OutputDir& out) {
  const auto model_path = cfg.at("model").get<std::string>();
  if (model_path.empty()) throw ConfigError("eval requires --model");
  const Network net = resolve_topology(cfg.at("topology").get<std::string>());
  const auto model = load_checkpoint(json::parse(read_file(model_path)), net);
  json report = {{"topology_hash", hex64(net.structure_fingerprint())}};
  const auto dataset_path = cfg.at("dataset").get<std::string>();
  if (!dataset_path.empty()) {
    auto records = load_dataset(dataset_path);
    if (records.empty()) throw DataError("eval: empty dataset");
    std::size_t agree = 0;
    for (const auto& r : records) {
      auto pred = model.predict(r.node_features, r.edge_features);
      auto argmin_excluding = [&](const std::vector<double>& v) {
        std::size_t best = r.source == 0 ? 1 : 0;
        for (std::size_t i = 0; i < v.size(); ++i)
          if (i != r.source && v[i] < v[best]) best = i;
        return best;
      };
      agree += argmin_excluding(pred) == argmin_excluding(r.labels) ? 1 : 0;
    }
    report["records"] = records.size();
    report["mse"] = evaluate_mse(model, records);
    report["top1_agreement"] = static_cast<double>(agree) / static_cast<double>(records.size());
  }
  out.write("eval.json", report.dump(2) + "\n");
}

inline void cmd_sweep(const json& cfg, OutputDir& out) {
  const auto sim = cfg.at("sim").get<SimConfig>();
  const auto param = parse_sweep_parameter(cfg.at("parameter").get<std::string>());
  const auto values = cfg.at("values").get<std::vector<double>>();
  const auto seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
  const auto policies = parse_policies(cfg.at("policies"));
  auto model = maybe_model(sim, resolve_topology(sim.topology), policies);
  auto cells = run_sweep(sim, param, values, seeds, policies, model);
  out.write("sweep.csv", sweep_table(param, cells));
  out.write("sweep_summary.csv", sweep_summary_table(param, cells));
  for (auto& [name, table] : sweep_series(param, cells)) out.write("series/" + name, table);
}

inline void cmd_analyze_frag(const json& cfg, OutputDir& out) {
  const auto sim = cfg.at("sim").get<SimConfig>();
  if (sim.policy == PolicyKind::mhgat) throw ConfigError("analyze-frag supports the greedy and oracle policies");
  auto study = analyze_fragmentation(sim, cfg.at("lambdas").get<std::vector<double>>(),
                                     cfg.at("seeds").get<std::vector<std::uint64_t>>());
  out.write("frag_points.csv", correlation_points_table(study));
  out.write("correlation.csv", correlation_table(study));
  out.write("series/correlation_bars.csv", correlation_table(study));
}

inline void cmd_bench_runtime(const json& cfg, OutputDir& out) {
  MigrationConfig m;
  m.rho = cfg.at("rho").get<double>();
  m.frag.max_field = cfg.at("K").get<std::size_t>();
  auto rows = benchmark_runtime(cfg.at("sizes").get<std::vector<std::size_t>>(), cfg.at("trials").get<std::size_t>(),
                                cfg.at("seed").get<std::uint64_t>(), m);
  out.write("bench_decisions.csv", decisions_table(rows));
  out.write("runtime.csv", runtime_table(rows), true);
  out.write("series/runtime_vs_nodes.csv", runtime_series(rows), true);
}

/// Runs one subcommand with a fully resolved configuration and writes the manifest.
inline json run_command(const std::string& sub, const json& cfg, const fs::path& out_dir) {
  const auto inputs = input_files(sub, cfg);
  json hashes = json::object();
  for (const auto& f : inputs) {
    if (!fs::exists(f)) throw ConfigError("missing input file " + f);
    hashes[f] = hex64(hash_file(f));
  }
  OutputDir out(out_dir);
  if (sub == "simulate") cmd_simulate(cfg, out);
  else if (sub == "gen-dataset") cmd_gen_dataset(cfg, out);
  else if (sub == "train") cmd_train(cfg, out);
  else if (sub == "eval") cmd_eval(cfg, out);
  else if (sub == "sweep") cmd_sweep(cfg, out);
  else if (sub == "analyze-frag") cmd_analyze_frag(cfg, out);
  else if (sub == "bench-runtime") cmd_bench_runtime(cfg, out);
  else throw ConfigError("unknown subcommand '" + sub + "'");

  json manifest = {{"tool", "fragmig"},
                   {"version", kVersion},
                   {"subcommand", sub},
                   {"config", cfg},
                   {"seed", nullptr},
                   {"inputs", hashes},
                   {"outputs", out.outputs()},
                   {"timing_outputs", out.timing_outputs()}};
  if (auto targets = seed_targets(sub); !targets.empty()) manifest["seed"] = cfg.at(json::json_pointer(targets.front()));
  write_text((out.path() / kManifestName).string(), manifest.dump(2) + "\n");
  return manifest;
}

/// Re-executes a manifest into `out_dir`. Inputs must still hash identically.
inline json rerun_manifest(const fs::path& manifest_path, const fs::path& out_dir) {
  json m;
  try {
    m = json::parse(read_file(manifest_path.string()));
  } catch (const json::exception& ex) {
    throw ParseError(std::string("manifest: ") + ex.what());
  }
  for (const auto& [file, hash] : m.at("inputs").items()) {
    if (!fs::exists(file)) throw ConfigError("rerun: input file " + file + " is missing");
    if (hex64(hash_file(file)) != hash.get<std::string>()) throw DataError("rerun: input file " + file + " changed since the recorded run");
  }
  return run_command(m.at("subcommand").get<std::string>(), m.at("config"), out_dir);
}

// ---------------------------------------------------------------------------
// Argument parsing

enum class FlagKind { number, integer, text, boolean, numbers, integers, texts };

struct Flag {
  std::string name;     // e.g. "--lambda"
  std::string pointer;  // JSON pointer into the resolved config
  FlagKind kind;
  std::string help;
};

inline std::vector<Flag> sim_flags(const std::string& p) {
  return {
      {"--topology", p + "/topology", FlagKind::text, "topology: 'nsfnet' or a topology JSON file"},
      {"--policy", p + "/policy", FlagKind::text, "migration policy: greedy, oracle or mhgat"},
      {"--model", p + "/model", FlagKind::text, "MHGAT checkpoint (required for policy mhgat)"},
      {"--horizon", p + "/horizon", FlagKind::integer, "number of time slots"},
      {"--warmup", p + "/warmup", FlagKind::integer, "leading slots excluded from summaries"},
      {"--lambda", p + "/workload/arrival_rate", FlagKind::number, "mean SFC arrivals per slot"},
      {"--demand-mode", p + "/workload/mode", FlagKind::text, "synthetic or trace"},
      {"--trace", p + "/traces", FlagKind::texts, "demand trace files (trace mode)"},
      {"--rho", p + "/rho", FlagKind::number, "overload threshold"},
      {"--gamma", p + "/gamma", FlagKind::number, "objective weight of fragmentation"},
      {"--q", p + "/q", FlagKind::number, "ring decay ratio"},
      {"--K", p + "/K", FlagKind::integer, "fragmentation receptive field in hops"},
      {"--zeta", p + "/zeta", FlagKind::integer, "migration attempts per node and round"},
      {"--bw", p + "/bandwidth_mbps", FlagKind::number, "migration bandwidth (MBps)"},
      {"--cpu-scale", p + "/cpu_scale", FlagKind::number, "node CPU capacity multiplier"},
      {"--mem-scale", p + "/mem_scale", FlagKind::number, "node memory capacity multiplier"},
      {"--bw-scale", p + "/bw_scale", FlagKind::number, "link bandwidth capacity multiplier"},
  };
}

inline std::vector<Flag> command_flags(const std::string& sub) {
  if (sub == "simulate") return sim_flags("");
  if (sub == "gen-dataset") {
    auto f = sim_flags("/sim");
    f.push_back({"--records", "/records", FlagKind::integer, "target number of records"});
    f.push_back({"--max-runs", "/max_runs", FlagKind::integer, "cap on simulation runs"});
    f.push_back({"--average-edge-demand", "/average_edge_demand", FlagKind::boolean, "average instead of sum adjacent link demand"});
    return f;
  }
  if (sub == "train")
    return {{"--dataset", "/dataset", FlagKind::text, "dataset JSONL file"},
            {"--topology", "/topology", FlagKind::text, "topology the dataset was generated on"},
            {"--epochs", "/train/max_epochs", FlagKind::integer, "maximum epochs"},
            {"--batch", "/train/batch_size", FlagKind::integer, "mini-batch size"},
            {"--lr", "/train/learning_rate", FlagKind::number, "Adam learning rate"},
            {"--patience", "/train/patience", FlagKind::integer, "early-stopping patience in epochs"},
            {"--val-fraction", "/train/val_fraction", FlagKind::number, "validation share"},
            {"--test-fraction", "/train/test_fraction", FlagKind::number, "held-out test share"},
            {"--no-gat", "/model/disable_gat", FlagKind::boolean, "ablation: uniform neighbor averaging"},
            {"--no-residual", "/model/disable_residual", FlagKind::boolean, "ablation: drop residual connections"},
            {"--no-multihop", "/model/disable_multihop", FlagKind::boolean, "ablation: base graph in every layer"},
            {"--average-edge-demand", "/model/average_edge_demand", FlagKind::boolean, "edge features use averaged demand"}};
  if (sub == "eval")
    return {{"--model", "/model", FlagKind::text, "MHGAT checkpoint"},
            {"--dataset", "/dataset", FlagKind::text, "dataset JSONL file to score"},
            {"--topology", "/topology", FlagKind::text, "topology: 'nsfnet' or a topology JSON file"}};
  if (sub == "sweep") {
    auto f = sim_flags("/sim");
    f.push_back({"--parameter", "/parameter", FlagKind::text, "lambda, cpu-scale, mem-scale or bw-scale"});
    f.push_back({"--values", "/values", FlagKind::numbers, "parameter values"});
    f.push_back({"--seeds", "/seeds", FlagKind::integers, "workload seeds"});
    f.push_back({"--policies", "/policies", FlagKind::texts, "policies to compare"});
    return f;
  }
  if (sub == "analyze-frag") {
    auto f = sim_flags("/sim");
    f.push_back({"--lambdas", "/lambdas", FlagKind::numbers, "arrival rates"});
    f.push_back({"--seeds", "/seeds", FlagKind::integers, "workload seeds"});
    return f;
  }
  if (sub == "bench-runtime")
    return {{"--sizes", "/sizes", FlagKind::integers, "complete-graph node counts"},
            {"--trials", "/trials", FlagKind::integer, "timed trials per size and policy"},
            {"--rho", "/rho", FlagKind::number, "overload threshold"},
            {"--K", "/K", FlagKind::integer, "fragmentation receptive field in hops"}};
  throw ConfigError("unknown subcommand '" + sub + "'");
}

inline json flag_value(const Flag& f, const std::vector<std::string>& raw) {
  auto number = [&](const std::string& s) {
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(f.name + ": expected a number, got '" + s + "'");
    return v;
  };
  auto integer = [&](const std::string& s) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(f.name + ": expected an integer, got '" + s + "'");
    return v;
  };
  std::vector<std::string> items;
  for (const auto& r : raw) {
    std::stringstream ss(r);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) items.push_back(item);
  }
  switch (f.kind) {
    case FlagKind::number: return number(raw.back());
    case FlagKind::integer: {
      const auto v = integer(raw.back());
      if (v < 0) return json(v);
      return json(static_cast<std::uint64_t>(v));
    }
    case FlagKind::text: return raw.back();
    case FlagKind::boolean: return true;
    case FlagKind::numbers: {
      json a = json::array();
      for (const auto& s : items) a.push_back(number(s));
      return a;
    }
    case FlagKind::integers: {
      json a = json::array();
      for (const auto& s : items) a.push_back(integer(s));
      return a;
    }
    case FlagKind::texts: return items;
  }
  return nullptr;
}

inline std::string error_document(const std::string& kind, const std::string& message, int code) {
  return json{{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", code}}.dump();
}

/// Entry point shared by the executable and the tests. Returns the exit status.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"fragmig: resource fragmentation and VNF migration simulator", "fragmig"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string config_path;
  auto* seed_opt = app.add_option("--seed", seed, "top-level random seed");
  app.add_option("--out-dir", out_dir, "output directory (one run per directory)");
  app.add_option("--config", config_path, "JSON file overriding defaults of the chosen subcommand");

  struct Bound {
    Flag flag;
    std::vector<std::string> raw;
    CLI::Option* opt = nullptr;
    bool set = false;
  };
  std::map<std::string, std::vector<std::unique_ptr<Bound>>> bound;
  std::map<std::string, CLI::App*> subs;
  auto describe = [&](const std::string& sub) {
    if (sub == "simulate") return "run the slot-by-slot lifecycle under one policy";
    if (sub == "gen-dataset") return "generate oracle-labeled training records";
    if (sub == "train") return "train an MHGAT model on a dataset";
    if (sub == "eval") return "score a checkpoint against a topology and dataset";
    if (sub == "sweep") return "sweep a parameter across seeds and policies";
    if (sub == "analyze-frag") return "correlate load metrics with the overload ratio";
    return "time one migration decision per policy on complete graphs";
  };
  for (const auto& sub : subcommands()) {
    auto* sc = app.add_subcommand(sub, describe(sub));
    subs[sub] = sc;
    const json defaults = default_config(sub);
    for (const auto& f : command_flags(sub)) {
      auto b = std::make_unique<Bound>();
      b->flag = f;
      const auto& d = defaults.at(json::json_pointer(f.pointer));
      const std::string def = d.is_string() ? d.get<std::string>() : d.dump();
      if (f.kind == FlagKind::boolean) {
        b->opt = sc->add_flag(f.name, b->set, f.help + " [default: " + def + "]");
      } else {
        b->opt = sc->add_option(f.name, b->raw, f.help);
        b->opt->default_str(def);
        if (f.kind != FlagKind::numbers && f.kind != FlagKind::integers && f.kind != FlagKind::texts) b->opt->expected(1);
      }
      bound[sub].push_back(std::move(b));
    }
  }
  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "re-execute a recorded manifest");
  rerun->add_option("--manifest", manifest_path, "manifest.json of a previous run")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << error_document("usage", ex.what(), 2) << '\n';
    return 2;
  }

  try {
    if (rerun->parsed()) {
      rerun_manifest(manifest_path, out_dir);
      log(LogLevel::info, "rerun complete: " + out_dir);
      return 0;
    }
    std::string sub;
    for (const auto& [name, sc] : subs)
      if (sc->parsed()) sub = name;
    json cfg = default_config(sub);
    if (!config_path.empty()) {
      json overrides;
      try {
        overrides = json::parse(read_file(config_path));
      } catch (const json::exception& ex) {
        throw ParseError("config " + config_path + ": " + ex.what());
      }
      if (!overrides.is_object()) throw ConfigError("config " + config_path + ": expected a JSON object");
      cfg.merge_patch(overrides);
    }
    if (seed_opt->count() > 0)
      for (const auto& p : seed_targets(sub)) cfg[json::json_pointer(p)] = seed;
    for (const auto& b : bound[sub]) {
      if (b->opt->count() == 0) continue;
      cfg[json::json_pointer(b->flag.pointer)] = flag_value(b->flag, b->raw);
    }
    // Materialize defaults through the typed structs, so the manifest holds every field.
    try {
      if (sub == "simulate") cfg = json(cfg.get<SimConfig>());
      if (cfg.contains("sim")) cfg["sim"] = json(cfg["sim"].get<SimConfig>());
      if (sub == "train") {
        cfg["train"] = json(cfg["train"].get<TrainConfig>());
        cfg["model"] = json(cfg["model"].get<MhgatConfig>());
      }
    } catch (const json::exception& ex) {
      throw ConfigError(std::string("invalid configuration: ") + ex.what());
    }
    const SimConfig* sim_check = nullptr;
    SimConfig tmp;
    if (sub == "simulate") tmp = cfg.get<SimConfig>(), sim_check = &tmp;
    if (cfg.contains("sim")) tmp = cfg["sim"].get<SimConfig>(), sim_check = &tmp;
    if (sim_check) {
      sim_check->validate();
      bool wants_model = sim_check->policy == PolicyKind::mhgat;
      if (sub == "sweep")
        for (auto p : parse_policies(cfg.at("policies"))) wants_model = wants_model || p == PolicyKind::mhgat;
      if (wants_model && sim_check->model.empty()) throw ConfigError("policy mhgat requires --model");
    }
    run_command(sub, cfg, out_dir);
    log(LogLevel::info, sub + " complete: " + out_dir);
    return 0;
  } catch (const Error& ex) {
    err << error_document(ex.kind(), ex.what(), 1) << '\n';
    return 1;
  } catch (const json::exception& ex) {
    err << error_document("config", ex.what(), 1) << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << error_document("internal", ex.what(), 1) << '\n';
    return 1;
  }
}

inline int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace fragmig::cli
