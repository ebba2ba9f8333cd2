#pragma once

#include <algorithm>
#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fragmig/common.hpp"
#include "fragmig/topology.hpp"
#include "fragmig/workload.hpp"

namespace fragmig {

struct VnfRef {
  SfcId sfc = 0;
  std::uint32_t vnf = 0;
  friend auto operator<=>(const VnfRef&, const VnfRef&) = default;
};

struct LinkRef {
  SfcId sfc = 0;
  std::uint32_t link = 0;
  friend auto operator<=>(const LinkRef&, const LinkRef&) = default;
};

struct ActiveSfc {
  SfcRequest request;
  std::vector<NodeId> placement;  // per VNF
  std::vector<Path> routes;       // per VNF link, host(src) -> host(dst)
};

/// Utilization-only view of a state; enough to evaluate fragmentation what-ifs.
struct UtilSnapshot {
  std::vector<NodeVec> node;
  std::vector<LinkVec> link;
};

/// Relocation of one VNF together with new routes for each of its adjacent VNF links.
struct MigrationAction {
  VnfRef vnf;
  NodeId from = 0;
  NodeId to = 0;
  std::vector<std::pair<std::uint32_t, Path>> routes;
};

struct OverloadedNode {
  NodeId node;
  std::size_t resource;
};

struct OverloadedLink {
  LinkId link;
  std::size_t resource;
};

struct OverloadSet {
  std::vector<OverloadedNode> nodes;
  std::vector<OverloadedLink> links;

  bool empty() const { return nodes.empty() && links.empty(); }
};

// Slack when re-validating a plan: plans and validation accumulate the same sums
// in different orders.
inline constexpr double kCapacityTolerance = 1e-9;

/// Dynamic placement of VNFs on nodes and VNF links on paths.
///
/// Node and link utilizations are cached and recomputed from the member sets
/// whenever those sets or the clock change.
class NetworkState {
 public:
  explicit NetworkState(const Network& net)
      : net_(&net),
        node_vnfs_(net.node_count()),
        link_members_(net.link_count()),
        node_util_(net.node_count(), NodeVec{}),
        link_util_(net.link_count(), LinkVec{}) {}

  const Network& network() const { return *net_; }
  int clock() const { return clock_; }

  /// Moves to slot t and re-reads every demand.
  void set_clock(int t) {
    clock_ = t;
    for (NodeId n = 0; n < node_vnfs_.size(); ++n) recompute_node(n);
    for (LinkId e = 0; e < link_members_.size(); ++e) recompute_link(e);
  }

  const NodeVec& node_util(NodeId n) const { return node_util_.at(n); }
  const LinkVec& link_util(LinkId e) const { return link_util_.at(e); }
  double node_utilization(NodeId n, std::size_t i) const { return node_util_.at(n).at(i); }
  double link_utilization(LinkId e, std::size_t i) const { return link_util_.at(e).at(i); }
  const std::vector<NodeVec>& node_utils() const { return node_util_; }
  const std::vector<LinkVec>& link_utils() const { return link_util_; }

  UtilSnapshot snapshot() const { return {node_util_, link_util_}; }

  const std::set<VnfRef>& vnfs_on(NodeId n) const { return node_vnfs_.at(n); }
  const std::set<LinkRef>& links_on(LinkId e) const { return link_members_.at(e); }
  const std::map<SfcId, ActiveSfc>& active() const { return active_; }
  bool is_active(SfcId id) const { return active_.count(id) != 0; }

  const ActiveSfc& sfc(SfcId id) const {
    auto it = active_.find(id);
    if (it == active_.end()) throw InvariantError("unknown SFC " + std::to_string(id));
    return it->second;
  }
  const Vnf& vnf(VnfRef r) const { return sfc(r.sfc).request.vnfs.at(r.vnf); }
  const VnfLink& vnf_link(LinkRef r) const { return sfc(r.sfc).request.links.at(r.link); }
  NodeId host(VnfRef r) const { return sfc(r.sfc).placement.at(r.vnf); }
  const Path& route(LinkRef r) const { return sfc(r.sfc).routes.at(r.link); }
  NodeVec demand(VnfRef r) const { return demand_at(vnf(r), clock_); }
  LinkVec demand(LinkRef r) const { return demand_at(vnf_link(r), clock_); }

  std::size_t vnf_count() const {
    std::size_t c = 0;
    for (const auto& s : node_vnfs_) c += s.size();
    return c;
  }

  /// Links of the owning SFC that end at (upstream) or start from (downstream) r.
  std::vector<LinkRef> upstream_links(VnfRef r) const {
    std::vector<LinkRef> out;
    for (const auto& l : sfc(r.sfc).request.links)
      if (l.dst == r.vnf) out.push_back({r.sfc, l.id});
    return out;
  }
  std::vector<LinkRef> adjacent_links(VnfRef r) const {
    std::vector<LinkRef> out;
    for (const auto& l : sfc(r.sfc).request.links)
      if (l.dst == r.vnf || l.src == r.vnf) out.push_back({r.sfc, l.id});
    return out;
  }

  /// Registers a fully placed and routed SFC. Consistency of placement and routes is checked.
  void install(SfcRequest request, std::vector<NodeId> placement, std::vector<Path> routes) {
    const SfcId id = request.id;
    if (active_.count(id)) throw InvariantError("SFC " + std::to_string(id) + " already active");
    if (placement.size() != request.vnfs.size() || routes.size() != request.links.size())
      throw InvariantError("install: placement/route count mismatch");
    for (std::size_t li = 0; li < routes.size(); ++li) {
      const auto& l = request.links[li];
      if (routes[li].front() != placement.at(l.src) || routes[li].back() != placement.at(l.dst))
        throw InvariantError("install: route does not connect VNF hosts");
    }
    auto& entry = active_[id];
    entry.request = std::move(request);
    entry.placement = std::move(placement);
    entry.routes = std::move(routes);
    std::set<NodeId> touched_nodes;
    std::set<LinkId> touched_links;
    for (std::uint32_t v = 0; v < entry.placement.size(); ++v) {
      node_vnfs_[entry.placement[v]].insert({id, v});
      touched_nodes.insert(entry.placement[v]);
    }
    for (std::uint32_t li = 0; li < entry.routes.size(); ++li)
      for (LinkId e : entry.routes[li].links) {
        link_members_[e].insert({id, li});
        touched_links.insert(e);
      }
    for (auto n : touched_nodes) recompute_node(n);
    for (auto e : touched_links) recompute_link(e);
  }

  /// Removes every SFC whose lifetime ended at or before slot t.
  std::size_t release_expired(int t) {
    std::vector<SfcId> expired;
    for (const auto& [id, s] : active_)
      if (s.request.expiry() <= t) expired.push_back(id);
    for (auto id : expired) remove(id);
    return expired.size();
  }

  void remove(SfcId id) {
    auto it = active_.find(id);
    if (it == active_.end()) return;
    std::set<NodeId> touched_nodes;
    std::set<LinkId> touched_links;
    const auto& s = it->second;
    for (std::uint32_t v = 0; v < s.placement.size(); ++v) {
      node_vnfs_[s.placement[v]].erase({id, v});
      touched_nodes.insert(s.placement[v]);
    }
    for (std::uint32_t li = 0; li < s.routes.size(); ++li)
      for (LinkId e : s.routes[li].links) {
        link_members_[e].erase({id, li});
        touched_links.insert(e);
      }
    active_.erase(it);
    for (auto n : touched_nodes) recompute_node(n);
    for (auto e : touched_links) recompute_link(e);
  }

  /// Checks an action against the current state: node threshold at the
  /// destination, bandwidth threshold and deadline on every new path.
  /// Returns an explanation when infeasible.
  std::optional<std::string> check_migration(const MigrationAction& a, double rho) const {
    const auto& s = sfc(a.vnf.sfc);
    if (a.vnf.vnf >= s.placement.size()) return "unknown VNF";
    if (s.placement[a.vnf.vnf] != a.from) return "source node does not host the VNF";
    if (a.from == a.to) return "source equals destination";
    if (a.to >= net_->node_count()) return "destination out of range";
    const auto d = demand(a.vnf);
    const auto& cap = net_->node(a.to).capacity;
    for (std::size_t i = 0; i < kNodeDims; ++i)
      if (node_util_[a.to][i] + d[i] > rho * cap[i] + kCapacityTolerance) return "destination node over threshold";

    auto adjacent = adjacent_links(a.vnf);
    if (adjacent.size() != a.routes.size()) return "missing route for an adjacent VNF link";
    auto util = link_util_;
    for (const auto& lr : adjacent) {
      const auto ld = demand(lr);
      for (LinkId e : route(lr).links) util[e] -= ld;
    }
    for (const auto& [li, path] : a.routes) {
      const LinkRef lr{a.vnf.sfc, li};
      if (std::find(adjacent.begin(), adjacent.end(), lr) == adjacent.end()) return "route for a non-adjacent VNF link";
      const auto& l = s.request.links.at(li);
      const NodeId src = l.src == a.vnf.vnf ? a.to : s.placement[l.src];
      const NodeId dst = l.dst == a.vnf.vnf ? a.to : s.placement[l.dst];
      if (path.front() != src || path.back() != dst) return "route does not connect the new hosts";
      if (path.delay_ms + s.request.vnfs[l.dst].processing_delay_ms > l.deadline_ms + kCapacityTolerance)
        return "route violates the link deadline";
      const auto ld = demand(lr);
      for (LinkId e : path.links) {
        util[e] += ld;
        for (std::size_t i = 0; i < kLinkDims; ++i)
          if (util[e][i] > rho * net_->link(e).capacity[i] + kCapacityTolerance) return "route over link threshold";
      }
    }
    return std::nullopt;
  }

  /// Applies a validated migration; throws InfeasibleMigration (state unchanged) otherwise.
  void apply_migration(const MigrationAction& a, double rho) {
    if (auto why = check_migration(a, rho)) throw InfeasibleMigration("migration infeasible: " + *why);
    auto& s = active_.at(a.vnf.sfc);
    std::set<LinkId> touched;
    node_vnfs_[a.from].erase(a.vnf);
    node_vnfs_[a.to].insert(a.vnf);
    s.placement[a.vnf.vnf] = a.to;
    for (const auto& [li, path] : a.routes) {
      for (LinkId e : s.routes[li].links) {
        link_members_[e].erase({a.vnf.sfc, li});
        touched.insert(e);
      }
      s.routes[li] = path;
      for (LinkId e : path.links) {
        link_members_[e].insert({a.vnf.sfc, li});
        touched.insert(e);
      }
    }
    recompute_node(a.from);
    recompute_node(a.to);
    for (auto e : touched) recompute_link(e);
  }

  /// Moves one VNF link onto a new path between the same hosts.
  void reroute(LinkRef r, Path path, double rho) {
    auto& s = active_.at(r.sfc);
    const auto& l = s.request.links.at(r.link);
    if (path.front() != s.placement[l.src] || path.back() != s.placement[l.dst])
      throw InfeasibleMigration("reroute: path does not connect the VNF hosts");
    const auto d = demand(r);
    auto util = link_util_;
    for (LinkId e : s.routes[r.link].links) util[e] -= d;
    for (LinkId e : path.links) {
      util[e] += d;
      for (std::size_t i = 0; i < kLinkDims; ++i)
        if (util[e][i] > rho * net_->link(e).capacity[i] + kCapacityTolerance)
          throw InfeasibleMigration("reroute: path over link threshold");
    }
    std::set<LinkId> touched;
    for (LinkId e : s.routes[r.link].links) {
      link_members_[e].erase(r);
      touched.insert(e);
    }
    s.routes[r.link] = std::move(path);
    for (LinkId e : s.routes[r.link].links) {
      link_members_[e].insert(r);
      touched.insert(e);
    }
    for (auto e : touched) recompute_link(e);
  }

  /// Sum of current demand over all active VNFs.
  NodeVec total_vnf_demand() const {
    NodeVec total{};
    for (const auto& [id, s] : active_)
      for (const auto& v : s.request.vnfs) total += demand_at(v, clock_);
    return total;
  }

  /// Rebuilds member sets and utilizations from the placement and route maps
  /// and compares them with the stored ones. Returns the first mismatch.
  std::optional<std::string> consistency_error() const {
    std::vector<std::set<VnfRef>> nodes(net_->node_count());
    std::vector<std::set<LinkRef>> links(net_->link_count());
    for (const auto& [id, s] : active_) {
      for (std::uint32_t v = 0; v < s.placement.size(); ++v) nodes.at(s.placement[v]).insert({id, v});
      for (std::uint32_t li = 0; li < s.routes.size(); ++li) {
        const auto& l = s.request.links[li];
        if (s.routes[li].front() != s.placement[l.src] || s.routes[li].back() != s.placement[l.dst])
          return "route of SFC " + std::to_string(id) + " link " + std::to_string(li) + " detached from hosts";
        for (LinkId e : s.routes[li].links) links.at(e).insert({id, li});
      }
    }
    if (nodes != node_vnfs_) return "node membership sets differ from placement map";
    if (links != link_members_) return "link membership sets differ from route map";
    for (NodeId n = 0; n < nodes.size(); ++n) {
      NodeVec u{};
      for (const auto& r : nodes[n]) u += demand(r);
      for (std::size_t i = 0; i < kNodeDims; ++i)
        if (std::abs(u[i] - node_util_[n][i]) > 1e-9) return "node utilization cache stale at node " + std::to_string(n);
    }
    for (LinkId e = 0; e < links.size(); ++e) {
      LinkVec u{};
      for (const auto& r : links[e]) u += demand(r);
      for (std::size_t i = 0; i < kLinkDims; ++i)
        if (std::abs(u[i] - link_util_[e][i]) > 1e-9) return "link utilization cache stale at link " + std::to_string(e);
    }
    return std::nullopt;
  }

  nlohmann::json snapshot_json() const {
    nlohmann::json doc;
    doc["slot"] = clock_;
    doc["nodes"] = nlohmann::json::array();
    for (NodeId n = 0; n < node_util_.size(); ++n)
      doc["nodes"].push_back({{"id", n}, {"utilization", node_util_[n]}, {"capacity", net_->node(n).capacity}});
    doc["links"] = nlohmann::json::array();
    for (LinkId e = 0; e < link_util_.size(); ++e)
      doc["links"].push_back({{"id", e}, {"utilization", link_util_[e]}, {"capacity", net_->link(e).capacity}});
    doc["sfcs"] = nlohmann::json::array();
    for (const auto& [id, s] : active_) {
      nlohmann::json routes = nlohmann::json::array();
      for (const auto& p : s.routes) routes.push_back(p.nodes);
      doc["sfcs"].push_back({{"id", id}, {"arrival", s.request.arrival}, {"expiry", s.request.expiry()},
                             {"placement", s.placement}, {"routes", routes}});
    }
    return doc;
  }

 private:
  void recompute_node(NodeId n) {
    NodeVec u{};
    for (const auto& r : node_vnfs_[n]) u += demand(r);
    node_util_[n] = u;
  }
  void recompute_link(LinkId e) {
    LinkVec u{};
    for (const auto& r : link_members_[e]) u += demand(r);
    link_util_[e] = u;
  }

  const Network* net_;
  int clock_ = 0;
  std::map<SfcId, ActiveSfc> active_;
  std::vector<std::set<VnfRef>> node_vnfs_;
  std::vector<std::set<LinkRef>> link_members_;
  std::vector<NodeVec> node_util_;
  std::vector<LinkVec> link_util_;
};

// ---------------------------------------------------------------------------

/// First path (in delay order) between src and dst whose edges all keep
/// bandwidth under rho * capacity after adding `demand`, whose delay stays within
/// max_delay_ms, and which avoids `exclude`.
inline std::optional<Path> select_path(const PathTable& table, const Network& net, std::span<const LinkVec> link_util,
                                       double rho, const LinkVec& demand, NodeId src, NodeId dst,
                                       double max_delay_ms, std::optional<LinkId> exclude = std::nullopt) {
  for (const auto& p : table.paths(src, dst)) {
    if (p.delay_ms > max_delay_ms) break;  // sorted by delay
    if (exclude && p.contains_link(*exclude)) continue;
    bool ok = true;
    for (LinkId e : p.links) {
      for (std::size_t i = 0; i < kLinkDims && ok; ++i)
        ok = link_util[e][i] + demand[i] <= rho * net.link(e).capacity[i];
      if (!ok) break;
    }
    if (ok) return p;
  }
  return std::nullopt;
}

inline double max_ratio(const NodeVec& util, const NodeVec& cap) {
  double m = 0.0;
  for (std::size_t i = 0; i < kNodeDims; ++i) m = std::max(m, util[i] / cap[i]);
  return m;
}

inline bool fits(const NodeVec& util, const NodeVec& add, const NodeVec& cap, double rho) {
  for (std::size_t i = 0; i < kNodeDims; ++i)
    if (util[i] + add[i] > rho * cap[i]) return false;
  return true;
}

struct DeployResult {
  bool accepted = false;
  std::vector<NodeId> placement;
};

inline constexpr std::size_t kDefaultDeployBudget = 4096;

/// Load-aware first fit with bounded backtracking. VNFs are placed in
/// topological order; candidate hosts are tried by ascending post-placement max
/// utilization ratio and each incoming VNF link by table order among feasible
/// paths. When a later VNF cannot be placed the search backs up to the most
/// recent choice, up to `budget` host/path trials in total. Co-located VNFs use
/// no bandwidth. On rejection the state is unchanged.
inline DeployResult deploy_sfc(NetworkState& state, const SfcRequest& sfc, const PathTable& table, double rho,
                               std::size_t budget = kDefaultDeployBudget) {
  if (state.is_active(sfc.id)) throw InvariantError("deploy: SFC " + std::to_string(sfc.id) + " already active");
  const Network& net = state.network();
  const int t = state.clock();
  auto node_util = state.node_utils();
  auto link_util = state.link_utils();
  std::vector<NodeId> placement(sfc.vnfs.size(), 0);
  std::vector<Path> routes(sfc.links.size());
  std::vector<std::vector<std::size_t>> incoming(sfc.vnfs.size());
  for (std::size_t li = 0; li < sfc.links.size(); ++li) incoming.at(sfc.links[li].dst).push_back(li);
  std::size_t trials = 0;

  // route incoming link number k of VNF vi, then continue with the rest
  std::function<bool(std::size_t)> place;
  std::function<bool(std::size_t, std::size_t)> route_in = [&](std::size_t vi, std::size_t k) -> bool {
    if (k == incoming[vi].size()) return place(vi + 1);
    const std::size_t li = incoming[vi][k];
    const auto& l = sfc.links[li];
    const auto ld = demand_at(l, t);
    const double max_delay = l.deadline_ms - sfc.vnfs[vi].processing_delay_ms;
    for (const auto& p : table.paths(placement[l.src], placement[vi])) {
      if (p.delay_ms > max_delay) break;
      bool ok = true;
      for (LinkId e : p.links)
        for (std::size_t i = 0; i < kLinkDims && ok; ++i)
          ok = link_util[e][i] + ld[i] <= rho * net.link(e).capacity[i];
      if (!ok) continue;
      if (++trials > budget) return false;
      const auto saved = link_util;
      for (LinkId e : p.links) link_util[e] += ld;
      routes[li] = p;
      if (route_in(vi, k + 1)) return true;
      link_util = saved;
      if (trials > budget) return false;
    }
    return false;
  };
  place = [&](std::size_t vi) -> bool {
    if (vi == sfc.vnfs.size()) return true;
    const auto d = demand_at(sfc.vnfs[vi], t);
    std::vector<NodeId> order(net.node_count());
    std::vector<double> score(net.node_count());
    for (NodeId n = 0; n < net.node_count(); ++n) {
      order[n] = n;
      score[n] = max_ratio(node_util[n] + d, net.node(n).capacity);
    }
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return score[a] < score[b]; });
    for (NodeId cand : order) {
      if (!fits(node_util[cand], d, net.node(cand).capacity, rho)) continue;
      if (++trials > budget) return false;
      placement[vi] = cand;
      const auto saved = node_util[cand];
      node_util[cand] += d;
      if (route_in(vi, 0)) return true;
      node_util[cand] = saved;
      if (trials > budget) return false;
    }
    return false;
  };

  if (!place(0)) return {};
  state.install(sfc, placement, routes);
  return {true, std::move(placement)};
}

/// Nodes and links with utilization strictly above rho * capacity, each tagged
/// with its highest-ratio resource.
inline OverloadSet detect_overloads(const NetworkState& state, double rho) {
  const Network& net = state.network();
  OverloadSet out;
  for (NodeId n = 0; n < net.node_count(); ++n) {
    const auto& u = state.node_util(n);
    const auto& cap = net.node(n).capacity;
    bool over = false;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < kNodeDims; ++i) {
      over = over || u[i] > rho * cap[i];
      if (u[i] / cap[i] > u[worst] / cap[worst]) worst = i;
    }
    if (over) out.nodes.push_back({n, worst});
  }
  for (LinkId e = 0; e < net.link_count(); ++e) {
    const auto& u = state.link_util(e);
    const auto& cap = net.link(e).capacity;
    bool over = false;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < kLinkDims; ++i) {
      over = over || u[i] > rho * cap[i];
      if (u[i] / cap[i] > u[worst] / cap[worst]) worst = i;
    }
    if (over) out.links.push_back({e, worst});
  }
  return out;
}

inline bool node_overloaded(const NetworkState& state, NodeId n, double rho) {
  const auto& u = state.node_util(n);
  const auto& cap = state.network().node(n).capacity;
  for (std::size_t i = 0; i < kNodeDims; ++i)
    if (u[i] > rho * cap[i]) return true;
  return false;
}

inline bool link_overloaded(const NetworkState& state, LinkId e, double rho) {
  const auto& u = state.link_util(e);
  const auto& cap = state.network().link(e).capacity;
  for (std::size_t i = 0; i < kLinkDims; ++i)
    if (u[i] > rho * cap[i]) return true;
  return false;
}

}  // namespace fragmig
