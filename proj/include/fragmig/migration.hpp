#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "fragmig/common.hpp"
#include "fragmig/fragmentation.hpp"
#include "fragmig/mhgat.hpp"
#include "fragmig/state.hpp"
#include "fragmig/topology.hpp"

namespace fragmig {

enum class PolicyKind { greedy, oracle, mhgat };

NLOHMANN_JSON_SERIALIZE_ENUM(PolicyKind, {{PolicyKind::greedy, "greedy"}, {PolicyKind::oracle, "oracle"},
                                          {PolicyKind::mhgat, "mhgat"}})

inline std::string to_string(PolicyKind k) { return nlohmann::json(k).get<std::string>(); }

inline PolicyKind parse_policy(const std::string& s) {
  if (s == "greedy") return PolicyKind::greedy;
  if (s == "oracle") return PolicyKind::oracle;
  if (s == "mhgat") return PolicyKind::mhgat;
  throw ConfigError("unknown policy '" + s + "' (expected greedy, oracle or mhgat)");
}

/// Destination rule plugged into the migration round. The mhgat kind carries a model.
class MigrationPolicy {
 public:
  static MigrationPolicy greedy() { return MigrationPolicy(PolicyKind::greedy, nullptr); }
  static MigrationPolicy oracle() { return MigrationPolicy(PolicyKind::oracle, nullptr); }
  static MigrationPolicy mhgat(std::shared_ptr<const MhgatModel> model) {
    if (!model) throw ConfigError("mhgat policy requires a model");
    return MigrationPolicy(PolicyKind::mhgat, std::move(model));
  }

  PolicyKind kind() const { return kind_; }
  const MhgatModel& model() const { return *model_; }

 private:
  MigrationPolicy(PolicyKind k, std::shared_ptr<const MhgatModel> m) : kind_(k), model_(std::move(m)) {}
  PolicyKind kind_;
  std::shared_ptr<const MhgatModel> model_;
};

struct MigrationConfig {
  double rho = 0.5;
  std::size_t zeta = 5;          // per-node attempt cap within one round
  double bandwidth_mbps = 1.0;   // dedicated migration bandwidth
  FragParams frag;
};

/// Everything a migration decision reads besides the state.
struct MigrationEnv {
  const Network& net;
  const PathTable& table;
  const FragmentationContext& frag;
  MigrationConfig cfg;
};

// ---------------------------------------------------------------------------
// VNF selection

inline std::size_t worst_node_resource(const NetworkState& state, NodeId n) {
  const auto& u = state.node_util(n);
  const auto& cap = state.network().node(n).capacity;
  std::size_t j = 0;
  for (std::size_t i = 1; i < kNodeDims; ++i)
    if (u[i] / cap[i] > u[j] / cap[j]) j = i;
  return j;
}

/// One-shot elimination rule: if even the largest VNF cannot clear the overload,
/// take the largest; otherwise the smallest VNF whose removal clears it.
/// Ties go to the lowest VNF reference. nullopt when every VNF is blacklisted.
inline std::optional<VnfRef> select_vnf(const NetworkState& state, NodeId n, std::size_t j, double rho,
                                        const std::set<VnfRef>& blacklist = {}) {
  const double u = state.node_util(n)[j];
  const double limit = rho * state.network().node(n).capacity[j];
  std::optional<VnfRef> largest;
  double largest_d = 0;
  for (const auto& v : state.vnfs_on(n)) {
    if (blacklist.count(v)) continue;
    const double d = state.demand(v)[j];
    if (!largest || d > largest_d) largest = v, largest_d = d;
  }
  if (!largest) return std::nullopt;
  if (u - largest_d > limit) return largest;
  std::optional<VnfRef> best;
  double best_d = 0;
  for (const auto& v : state.vnfs_on(n)) {
    if (blacklist.count(v)) continue;
    const double d = state.demand(v)[j];
    if (u - d > limit) continue;
    if (!best || d < best_d) best = v, best_d = d;
  }
  return best;
}

/// Baseline selection: the VNF occupying the most of resource j.
inline std::optional<VnfRef> select_vnf_largest(const NetworkState& state, NodeId n, std::size_t j,
                                                const std::set<VnfRef>& blacklist = {}) {
  std::optional<VnfRef> best;
  double best_d = 0;
  for (const auto& v : state.vnfs_on(n)) {
    if (blacklist.count(v)) continue;
    const double d = state.demand(v)[j];
    if (!best || d > best_d) best = v, best_d = d;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Planning and loss

/// Destination check plus route reselection for every VNF link adjacent to v,
/// on link utilizations with v's current routes removed. nullopt if infeasible.
inline std::optional<MigrationAction> plan_migration(const NetworkState& state, const PathTable& table, VnfRef v,
                                                     NodeId dst, double rho) {
  const Network& net = state.network();
  const NodeId src = state.host(v);
  if (dst == src || dst >= net.node_count()) return std::nullopt;
  if (!fits(state.node_util(dst), state.demand(v), net.node(dst).capacity, rho)) return std::nullopt;

  const auto& s = state.sfc(v.sfc);
  const auto adjacent = state.adjacent_links(v);
  std::vector<LinkVec> util = state.link_utils();
  for (const auto& lr : adjacent) {
    const auto d = state.demand(lr);
    for (LinkId e : state.route(lr).links) util[e] -= d;
  }
  MigrationAction a{v, src, dst, {}};
  for (const auto& lr : adjacent) {
    const auto& l = s.request.links[lr.link];
    const NodeId a_host = l.src == v.vnf ? dst : s.placement[l.src];
    const NodeId b_host = l.dst == v.vnf ? dst : s.placement[l.dst];
    const auto d = state.demand(lr);
    auto p = select_path(table, net, util, rho, d, a_host, b_host,
                         l.deadline_ms - s.request.vnfs[l.dst].processing_delay_ms);
    if (!p) return std::nullopt;
    for (LinkId e : p->links) util[e] += d;
    a.routes.emplace_back(lr.link, std::move(*p));
  }
  return a;
}

/// Utilizations after `a`, derived incrementally from the current state.
inline UtilSnapshot apply_to_snapshot(const NetworkState& state, const MigrationAction& a) {
  UtilSnapshot s = state.snapshot();
  const auto d = state.demand(a.vnf);
  s.node[a.from] -= d;
  s.node[a.to] += d;
  for (const auto& [li, path] : a.routes) {
    const LinkRef lr{a.vnf.sfc, li};
    const auto ld = state.demand(lr);
    for (LinkId e : state.route(lr).links) s.link[e] -= ld;
    for (LinkId e : path.links) s.link[e] += ld;
  }
  return s;
}

/// (memory / BW + min-delay propagation) x upstream bandwidth demand.
/// Memory is GB converted to MB, BW in MBps, delays in ms.
inline double migration_loss(const NetworkState& state, const PathTable& table, VnfRef v, NodeId dst,
                             double bandwidth_mbps) {
  const NodeId src = state.host(v);
  const Path* p = table.shortest(src, dst);
  if (!p) throw InfeasibleMigration("migration loss: no path from " + std::to_string(src) + " to " + std::to_string(dst));
  const double t_tr = state.demand(v)[kMem] * 1000.0 / bandwidth_mbps;
  const double t_pr = p->delay_ms / 1000.0;
  double upstream = 0.0;
  for (const auto& lr : state.upstream_links(v)) upstream += state.demand(lr)[kBandwidth];
  return (t_tr + t_pr) * upstream;
}

// ---------------------------------------------------------------------------
// Destination policies

struct Decision {
  std::optional<MigrationAction> action;
  std::vector<double> labels;  // oracle only: post-move level per destination
  std::vector<double> scores;  // mhgat only: predicted level per destination
};

/// Feasible node (current host excluded) with the largest residual of resource j.
inline Decision greedy_destination(const NetworkState& state, const PathTable& table, VnfRef v, std::size_t j,
                                   double rho) {
  const Network& net = state.network();
  std::vector<NodeId> order;
  for (NodeId n = 0; n < net.node_count(); ++n) order.push_back(n);
  auto residual = [&](NodeId n) { return net.node(n).capacity[j] - state.node_util(n)[j]; };
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return residual(a) > residual(b); });
  Decision d;
  for (NodeId n : order)
    if (auto a = plan_migration(state, table, v, n, rho)) {
      d.action = std::move(a);
      break;
    }
  return d;
}

inline constexpr double kInfeasibleLabel = 1.0;

/// Exhaustive what-if over every destination. labels[host] is the current level;
/// infeasible destinations get kInfeasibleLabel. Chooses the feasible argmin.
inline Decision oracle_destination(const NetworkState& state, const MigrationEnv& env, VnfRef v) {
  const NodeId host = state.host(v);
  Decision d;
  d.labels.assign(env.net.node_count(), kInfeasibleLabel);
  std::vector<std::optional<MigrationAction>> plans(env.net.node_count());
  std::optional<NodeId> best;
  for (NodeId n = 0; n < env.net.node_count(); ++n) {
    if (n == host) {
      d.labels[n] = max_weighted_fragmentation(env.frag, state.snapshot(), env.cfg.frag);
      continue;
    }
    plans[n] = plan_migration(state, env.table, v, n, env.cfg.rho);
    if (!plans[n]) continue;
    d.labels[n] = max_weighted_fragmentation(env.frag, apply_to_snapshot(state, *plans[n]), env.cfg.frag);
    if (!best || d.labels[n] < d.labels[*best]) best = n;
  }
  if (best) d.action = std::move(plans[*best]);
  return d;
}

/// Feasible node (current host excluded) with the smallest predicted level.
inline Decision mhgat_destination(const NetworkState& state, const PathTable& table, const MhgatModel& model,
                                  VnfRef v, double rho) {
  Decision d;
  d.scores = model.predict(build_node_features(state, v),
                           build_edge_features(state, v, model.config().average_edge_demand));
  std::vector<NodeId> order;
  for (NodeId n = 0; n < state.network().node_count(); ++n) order.push_back(n);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return d.scores[a] < d.scores[b]; });
  for (NodeId n : order)
    if (auto a = plan_migration(state, table, v, n, rho)) {
      d.action = std::move(a);
      break;
    }
  return d;
}

// ---------------------------------------------------------------------------
// One round of overload relief

enum class EventKind { migrated, failed, exhausted, rerouted, reroute_failed };

NLOHMANN_JSON_SERIALIZE_ENUM(EventKind, {{EventKind::migrated, "migrated"}, {EventKind::failed, "failed"},
                                         {EventKind::exhausted, "exhausted"}, {EventKind::rerouted, "rerouted"},
                                         {EventKind::reroute_failed, "reroute_failed"}})

struct MigrationEvent {
  EventKind kind = EventKind::migrated;
  NodeId node = 0;  // overloaded node, or overloaded link id for reroutes
  SfcId sfc = 0;
  std::uint32_t element = 0;  // VNF index or VNF link index
  NodeId from = 0;
  NodeId to = 0;
  double loss = 0.0;
};

struct MigrationOutcome {
  std::vector<MigrationAction> actions;
  std::vector<double> losses;  // per applied action
  double total_loss = 0.0;
  std::vector<MigrationEvent> events;
  std::vector<std::pair<NodeId, std::size_t>> iterations;  // per handled node
  std::size_t reroutes = 0;
  double post_fragmentation = 0.0;
};

/// Called after a VNF has been selected and its destination decided, before the
/// move is applied.
using DecisionObserver = std::function<void(const NetworkState&, VnfRef, NodeId, const Decision&)>;

inline Decision decide(const NetworkState& state, const MigrationEnv& env, const MigrationPolicy& policy, VnfRef v,
                       std::size_t j) {
  switch (policy.kind()) {
    case PolicyKind::greedy: return greedy_destination(state, env.table, v, j, env.cfg.rho);
    case PolicyKind::oracle: return oracle_destination(state, env, v);
    case PolicyKind::mhgat: return mhgat_destination(state, env.table, policy.model(), v, env.cfg.rho);
  }
  return {};
}

inline std::optional<VnfRef> select_for_policy(const NetworkState& state, const MigrationPolicy& policy, NodeId n,
                                               std::size_t j, double rho, const std::set<VnfRef>& blacklist) {
  return policy.kind() == PolicyKind::greedy ? select_vnf_largest(state, n, j, blacklist)
                                             : select_vnf(state, n, j, rho, blacklist);
}

/// Node phase: each overloaded node (ascending id) gets up to zeta
/// select/decide/apply attempts; failed VNFs are blacklisted for that node.
/// Link phase: VNF links leave each still-overloaded link, largest demand first,
/// until the deficit is covered.
inline MigrationOutcome run_migration_round(NetworkState& state, const MigrationEnv& env, const MigrationPolicy& policy,
                                            const DecisionObserver& observer = {}) {
  if (env.cfg.zeta < 1) throw ConfigError("migration: zeta must be >= 1");
  const double rho = env.cfg.rho;
  MigrationOutcome out;
  const auto initial = detect_overloads(state, rho);
  for (const auto& ov : initial.nodes) {
    const NodeId n = ov.node;
    std::set<VnfRef> blacklist;
    std::size_t iter = 0;
    while (node_overloaded(state, n, rho) && iter < env.cfg.zeta) {
      ++iter;
      const std::size_t j = worst_node_resource(state, n);
      auto v = select_for_policy(state, policy, n, j, rho, blacklist);
      if (!v) {
        out.events.push_back({EventKind::exhausted, n, 0, 0, n, n, 0.0});
        break;
      }
      Decision dec = decide(state, env, policy, *v, j);
      if (observer) observer(state, *v, n, dec);
      if (!dec.action) {
        blacklist.insert(*v);
        out.events.push_back({EventKind::failed, n, v->sfc, v->vnf, n, n, 0.0});
        continue;
      }
      const double loss = migration_loss(state, env.table, *v, dec.action->to, env.cfg.bandwidth_mbps);
      state.apply_migration(*dec.action, rho);
      out.events.push_back({EventKind::migrated, n, v->sfc, v->vnf, dec.action->from, dec.action->to, loss});
      out.losses.push_back(loss);
      out.total_loss += loss;
      out.actions.push_back(std::move(*dec.action));
    }
    out.iterations.emplace_back(n, iter);
  }

  const auto links = detect_overloads(state, rho).links;
  for (const auto& ov : links) {
    const LinkId e = ov.link;
    const std::size_t j = ov.resource;
    double deficit = state.link_util(e)[j] - rho * env.net.link(e).capacity[j];
    std::vector<LinkRef> members(state.links_on(e).begin(), state.links_on(e).end());
    std::vector<double> dem(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) dem[i] = state.demand(members[i])[j];
    std::vector<std::size_t> order(members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dem[a] > dem[b]; });
    for (std::size_t i : order) {
      if (deficit <= 0) break;
      const LinkRef lr = members[i];
      const auto& s = state.sfc(lr.sfc);
      const auto& l = s.request.links[lr.link];
      auto util = state.link_utils();
      const auto d = state.demand(lr);
      for (LinkId x : state.route(lr).links) util[x] -= d;
      auto p = select_path(env.table, env.net, util, rho, d, s.placement[l.src], s.placement[l.dst],
                           l.deadline_ms - s.request.vnfs[l.dst].processing_delay_ms, e);
      if (!p) {
        out.events.push_back({EventKind::reroute_failed, e, lr.sfc, lr.link, 0, 0, 0.0});
        continue;
      }
      state.reroute(lr, std::move(*p), rho);
      deficit -= dem[i];
      ++out.reroutes;
      out.events.push_back({EventKind::rerouted, e, lr.sfc, lr.link, 0, 0, 0.0});
    }
  }
  out.post_fragmentation = max_weighted_fragmentation(env.frag, state.snapshot(), env.cfg.frag);
  return out;
}

}  // namespace fragmig
