#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fragmig/common.hpp"

namespace fragmig {

struct NodeSpec {
  NodeId id = 0;
  NodeVec capacity{};
};

struct LinkSpec {
  LinkId id = 0;
  NodeId u = 0;
  NodeId v = 0;
  LinkVec capacity{};
  double delay_ms = 0.0;

  NodeId other(NodeId n) const { return n == u ? v : u; }
};

// A simple path. nodes.size() == links.size() + 1; a path with a single node
// stands for two co-located endpoints.
struct Path {
  std::vector<NodeId> nodes;
  std::vector<LinkId> links;
  double delay_ms = 0.0;

  std::size_t hops() const { return links.size(); }
  NodeId front() const { return nodes.front(); }
  NodeId back() const { return nodes.back(); }
  bool contains_link(LinkId e) const { return std::find(links.begin(), links.end(), e) != links.end(); }

  friend bool operator==(const Path&, const Path&) = default;
};

struct Adjacent {
  NodeId node;
  LinkId link;
};

/// Undirected, connected, simple physical network with per-node and per-link capacities.
class Network {
 public:
  Network() = default;

  Network(std::vector<NodeSpec> nodes, std::vector<LinkSpec> links)
      : nodes_(std::move(nodes)), links_(std::move(links)) {
    validate_and_index();
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }
  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<LinkSpec>& links() const { return links_; }
  const NodeSpec& node(NodeId n) const { return nodes_.at(n); }
  const LinkSpec& link(LinkId e) const { return links_.at(e); }
  const std::vector<Adjacent>& adjacent(NodeId n) const { return adjacency_.at(n); }

  std::optional<LinkId> link_between(NodeId a, NodeId b) const {
    for (const auto& adj : adjacency_.at(a))
      if (adj.node == b) return adj.link;
    return std::nullopt;
  }

  /// BFS hop distances from src; every node is reachable (connectivity invariant).
  std::vector<std::size_t> hop_distances(NodeId src) const {
    std::vector<std::size_t> dist(nodes_.size(), kUnreachable);
    std::queue<NodeId> q;
    dist.at(src) = 0;
    q.push(src);
    while (!q.empty()) {
      NodeId n = q.front();
      q.pop();
      for (const auto& adj : adjacency_[n]) {
        if (dist[adj.node] == kUnreachable) {
          dist[adj.node] = dist[n] + 1;
          q.push(adj.node);
        }
      }
    }
    return dist;
  }

  std::size_t diameter() const {
    std::size_t d = 0;
    for (NodeId n = 0; n < nodes_.size(); ++n) {
      auto dist = hop_distances(n);
      d = std::max(d, *std::max_element(dist.begin(), dist.end()));
    }
    return d;
  }

  /// Fingerprint over the exact capacities, endpoints and delays.
  std::uint64_t fingerprint() const {
    Fnv1a h;
    h.update_value(nodes_.size());
    for (const auto& n : nodes_) h.update(n.capacity.data(), sizeof(double) * kNodeDims);
    h.update_value(links_.size());
    for (const auto& l : links_) {
      h.update_value(l.u);
      h.update_value(l.v);
      h.update(l.capacity.data(), sizeof(double) * kLinkDims);
      h.update_value(l.delay_ms);
    }
    return h.digest();
  }

  /// Node count and link endpoints only; capacity rescaling keeps this value.
  std::uint64_t structure_fingerprint() const {
    Fnv1a h;
    h.update_value(nodes_.size());
    h.update_value(links_.size());
    for (const auto& l : links_) {
      h.update_value(l.u);
      h.update_value(l.v);
    }
    return h.digest();
  }

  static constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

 private:
  void validate_and_index() {
    const std::size_t n = nodes_.size();
    if (n == 0) throw InvariantError("topology: no nodes");
    for (std::size_t i = 0; i < n; ++i) {
      if (nodes_[i].id != i) throw InvariantError("nodes[" + std::to_string(i) + "].id must equal its index");
      for (std::size_t d = 0; d < kNodeDims; ++d)
        if (!(nodes_[i].capacity[d] > 0.0))
          throw InvariantError("nodes[" + std::to_string(i) + "].capacity[" + std::to_string(d) + "] must be > 0");
    }
    adjacency_.assign(n, {});
    for (std::size_t e = 0; e < links_.size(); ++e) {
      auto& l = links_[e];
      const std::string where = "links[" + std::to_string(e) + "]";
      if (l.id != e) throw InvariantError(where + ".id must equal its index");
      if (l.u >= n || l.v >= n) throw InvariantError(where + ": endpoint is not a declared node");
      if (l.u == l.v) throw InvariantError(where + ": self-loop");
      for (std::size_t d = 0; d < kLinkDims; ++d)
        if (!(l.capacity[d] > 0.0)) throw InvariantError(where + ".bandwidth must be > 0");
      if (!(l.delay_ms > 0.0)) throw InvariantError(where + ".delay_ms must be > 0");
      for (const auto& adj : adjacency_[l.u])
        if (adj.node == l.v) throw InvariantError(where + ": duplicate link");
      adjacency_[l.u].push_back({l.v, e});
      adjacency_[l.v].push_back({l.u, e});
    }
    auto dist = hop_distances(0);
    for (std::size_t i = 0; i < n; ++i)
      if (dist[i] == kUnreachable)
        throw InvariantError("topology is disconnected: node " + std::to_string(i) + " unreachable from node 0");
  }

  std::vector<NodeSpec> nodes_;
  std::vector<LinkSpec> links_;
  std::vector<std::vector<Adjacent>> adjacency_;
};

// ---------------------------------------------------------------------------
// Topology documents: {"nodes": [{id, cpu, mem}], "links": [{u, v, bandwidth, delay_ms}]}

inline Network load_topology(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("links"))
    throw ParseError("topology document needs 'nodes' and 'links' arrays");
  const auto& jn = doc.at("nodes");
  const auto& jl = doc.at("links");
  if (!jn.is_array() || !jl.is_array()) throw ParseError("'nodes' and 'links' must be arrays");

  std::vector<NodeSpec> nodes(jn.size());
  std::vector<bool> seen(jn.size(), false);
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const auto& o = jn[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    try {
      auto id = o.at("id").get<std::int64_t>();
      if (id < 0 || static_cast<std::size_t>(id) >= jn.size())
        throw InvariantError(where + ".id out of range (ids must be 0..N-1)");
      if (seen[static_cast<std::size_t>(id)]) throw InvariantError(where + ".id duplicated");
      seen[static_cast<std::size_t>(id)] = true;
      auto& spec = nodes[static_cast<std::size_t>(id)];
      spec.id = static_cast<NodeId>(id);
      spec.capacity = {o.at("cpu").get<double>(), o.at("mem").get<double>()};
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(where + ": " + ex.what());
    }
  }

  std::vector<LinkSpec> links(jl.size());
  for (std::size_t e = 0; e < jl.size(); ++e) {
    const auto& o = jl[e];
    const std::string where = "links[" + std::to_string(e) + "]";
    try {
      auto u = o.at("u").get<std::int64_t>();
      auto v = o.at("v").get<std::int64_t>();
      if (u < 0 || v < 0) throw InvariantError(where + ": negative endpoint");
      links[e] = LinkSpec{e, static_cast<NodeId>(u), static_cast<NodeId>(v), {o.at("bandwidth").get<double>()},
                          o.at("delay_ms").get<double>()};
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(where + ": " + ex.what());
    }
  }
  return Network(std::move(nodes), std::move(links));
}

inline Network parse_topology(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(std::string("topology document: ") + ex.what());
  }
  return load_topology(doc);
}

inline nlohmann::json to_json(const Network& net) {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (const auto& n : net.nodes())
    doc["nodes"].push_back({{"id", n.id}, {"cpu", n.capacity[kCpu]}, {"mem", n.capacity[kMem]}});
  doc["links"] = nlohmann::json::array();
  for (const auto& l : net.links())
    doc["links"].push_back({{"u", l.u}, {"v", l.v}, {"bandwidth", l.capacity[kBandwidth]}, {"delay_ms", l.delay_ms}});
  return doc;
}

/// Copy of net with node/link capacities multiplied per dimension.
inline Network scale_capacities(const Network& net, double cpu, double mem, double bw) {
  auto nodes = net.nodes();
  auto links = net.links();
  for (auto& n : nodes) {
    n.capacity[kCpu] *= cpu;
    n.capacity[kMem] *= mem;
  }
  for (auto& l : links) l.capacity[kBandwidth] *= bw;
  return Network(std::move(nodes), std::move(links));
}

inline Network complete_graph(std::size_t n, NodeVec node_cap, LinkVec link_cap, double delay_ms) {
  std::vector<NodeSpec> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back({i, node_cap});
  std::vector<LinkSpec> links;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) links.push_back({links.size(), i, j, link_cap, delay_ms});
  return Network(std::move(nodes), std::move(links));
}

// ---------------------------------------------------------------------------
// Neighborhoods and path enumeration

/// Nodes whose shortest-path hop distance from n is exactly k.
inline std::vector<NodeId> k_hop_neighbors(const Network& net, NodeId n, std::size_t k) {
  auto dist = net.hop_distances(n);
  std::vector<NodeId> out;
  for (NodeId i = 0; i < dist.size(); ++i)
    if (dist[i] == k) out.push_back(i);
  return out;
}

namespace detail {

// Depth-first enumeration of simple paths from the path's last node. visit() is
// called on every prefix with 1..max_hops links.
template <typename Visit>
void extend_simple_paths(const Network& net, Path& path, std::vector<char>& on_path, std::size_t max_hops,
                         Visit&& visit) {
  if (path.hops() == max_hops) return;
  const NodeId tail = path.back();
  for (const auto& adj : net.adjacent(tail)) {
    if (on_path[adj.node]) continue;
    on_path[adj.node] = 1;
    path.nodes.push_back(adj.node);
    path.links.push_back(adj.link);
    path.delay_ms += net.link(adj.link).delay_ms;
    visit(static_cast<const Path&>(path));
    extend_simple_paths(net, path, on_path, max_hops, visit);
    path.delay_ms -= net.link(adj.link).delay_ms;
    path.links.pop_back();
    path.nodes.pop_back();
    on_path[adj.node] = 0;
  }
}

template <typename Visit>
void for_each_simple_path(const Network& net, NodeId src, std::size_t max_hops, Visit&& visit) {
  Path path;
  path.nodes.push_back(src);
  std::vector<char> on_path(net.node_count(), 0);
  on_path[src] = 1;
  extend_simple_paths(net, path, on_path, max_hops, visit);
}

}  // namespace detail

/// All simple paths with exactly k links starting at n.
inline std::vector<Path> k_hop_paths(const Network& net, NodeId n, std::size_t k) {
  std::vector<Path> out;
  if (k == 0) return out;
  detail::for_each_simple_path(net, n, k, [&](const Path& p) {
    if (p.hops() == k) out.push_back(p);
  });
  return out;
}

inline bool path_less(const Path& a, const Path& b) {
  if (a.delay_ms != b.delay_ms) return a.delay_ms < b.delay_ms;
  if (a.hops() != b.hops()) return a.hops() < b.hops();
  return a.nodes < b.nodes;
}

/// Precomputed simple paths for every ordered node pair, sorted by total delay
/// (then hop count, then node sequence) and truncated to per_pair_cap entries.
class PathTable {
 public:
  static constexpr std::size_t kDefaultMaxHops = 6;
  static constexpr std::size_t kDefaultPerPairCap = 64;

  PathTable() = default;

  PathTable(const Network& net, std::size_t max_hops = kDefaultMaxHops, std::size_t per_pair_cap = kDefaultPerPairCap)
      : n_(net.node_count()), max_hops_(max_hops), per_pair_cap_(per_pair_cap) {
    if (max_hops == 0) throw ConfigError("path table: max_hops must be >= 1");
    if (per_pair_cap == 0) throw ConfigError("path table: per-pair cap must be >= 1");
    table_.assign(n_ * n_, {});
    for (NodeId src = 0; src < n_; ++src) {
      table_[src * n_ + src].push_back(Path{{src}, {}, 0.0});
      detail::for_each_simple_path(net, src, max_hops, [&](const Path& p) { table_[src * n_ + p.back()].push_back(p); });
      for (NodeId dst = 0; dst < n_; ++dst) {
        auto& list = table_[src * n_ + dst];
        std::sort(list.begin(), list.end(), path_less);
        if (list.size() > per_pair_cap) list.resize(per_pair_cap);
      }
    }
  }

  const std::vector<Path>& paths(NodeId src, NodeId dst) const { return table_.at(src * n_ + dst); }
  std::size_t max_hops() const { return max_hops_; }
  std::size_t per_pair_cap() const { return per_pair_cap_; }
  std::size_t node_count() const { return n_; }

  /// Minimum-delay path, if any pair path exists within the hop cap.
  const Path* shortest(NodeId src, NodeId dst) const {
    const auto& list = paths(src, dst);
    return list.empty() ? nullptr : &list.front();
  }

 private:
  std::size_t n_ = 0;
  std::size_t max_hops_ = kDefaultMaxHops;
  std::size_t per_pair_cap_ = kDefaultPerPairCap;
  std::vector<std::vector<Path>> table_;
};

/// Undirected graph joining node pairs that have a simple path of exactly `hops` links.
struct MultiHopGraph {
  std::size_t hops = 1;
  std::vector<std::pair<NodeId, NodeId>> edges;  // i < j, sorted
  std::vector<std::vector<NodeId>> neighbors;     // sorted, no self entries

  bool has_edge(NodeId a, NodeId b) const {
    return std::binary_search(neighbors.at(a).begin(), neighbors.at(a).end(), b);
  }
};

inline MultiHopGraph derive_multi_hop_graph(const Network& net, std::size_t k) {
  if (k == 0) throw ConfigError("multi-hop graph: k must be >= 1");
  const std::size_t n = net.node_count();
  MultiHopGraph g;
  g.hops = k;
  g.neighbors.assign(n, {});
  std::vector<char> mark(n * n, 0);
  for (NodeId src = 0; src < n; ++src) {
    detail::for_each_simple_path(net, src, k, [&](const Path& p) {
      if (p.hops() == k) mark[src * n + p.back()] = 1;
    });
  }
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = 0; j < n; ++j)
      if (i != j && (mark[i * n + j] || mark[j * n + i])) {
        g.neighbors[i].push_back(j);
        if (i < j) g.edges.emplace_back(i, j);
      }
  return g;
}

}  // namespace fragmig
