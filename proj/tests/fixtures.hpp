#pragma once

// Small hand-built networks and SFCs, plus straight-line reference
// implementations used as independent oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "fragmig/fragmig.hpp"

namespace fixtures {

using namespace fragmig;

struct Edge {
  NodeId u, v;
  double bw;
  double delay;
};

inline Network make_net(const std::vector<NodeVec>& caps, const std::vector<Edge>& edges) {
  std::vector<NodeSpec> nodes;
  for (std::size_t i = 0; i < caps.size(); ++i) nodes.push_back({i, caps[i]});
  std::vector<LinkSpec> links;
  for (std::size_t e = 0; e < edges.size(); ++e) links.push_back({e, edges[e].u, edges[e].v, {edges[e].bw}, edges[e].delay});
  return Network(std::move(nodes), std::move(links));
}

/// Path graph 0-1-...-(n-1).
inline Network line_net(std::size_t n, NodeVec cap = {32, 64}, double bw = 5, double delay = 1) {
  std::vector<Edge> edges;
  for (NodeId i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, bw, delay});
  return make_net(std::vector<NodeVec>(n, cap), edges);
}

inline Network triangle(NodeVec cap = {32, 64}, double bw = 5) {
  return make_net({cap, cap, cap}, {{0, 1, bw, 1}, {1, 2, bw, 1}, {0, 2, bw, 1}});
}

/// Linear chain with constant demands; every link deadline is `deadline`.
inline SfcRequest make_sfc(SfcId id, const std::vector<NodeVec>& vnf_demand, const std::vector<double>& link_bw,
                           int arrival = 0, int lifetime = 10, double deadline = 1000, double proc = 0) {
  SfcRequest s;
  s.id = id;
  s.arrival = arrival;
  s.lifetime = lifetime;
  s.latency_limit_ms = deadline;
  for (std::size_t i = 0; i < vnf_demand.size(); ++i) {
    Vnf v;
    v.id = static_cast<std::uint32_t>(i);
    v.owner = id;
    v.start_slot = arrival;
    v.processing_delay_ms = proc;
    v.demand.samples.assign(static_cast<std::size_t>(lifetime), vnf_demand[i]);
    s.vnfs.push_back(v);
  }
  for (std::size_t i = 0; i < link_bw.size(); ++i) {
    VnfLink l;
    l.id = static_cast<std::uint32_t>(i);
    l.src = static_cast<std::uint32_t>(i);
    l.dst = static_cast<std::uint32_t>(i + 1);
    l.start_slot = arrival;
    l.deadline_ms = deadline;
    l.demand.samples.assign(static_cast<std::size_t>(lifetime), LinkVec{link_bw[i]});
    s.links.push_back(l);
  }
  return s;
}

/// Routes every link on the first table path between the given hosts and installs the SFC.
inline void install(NetworkState& state, const PathTable& table, SfcRequest sfc, std::vector<NodeId> placement) {
  std::vector<Path> routes;
  for (const auto& l : sfc.links) routes.push_back(table.paths(placement[l.src], placement[l.dst]).front());
  state.install(std::move(sfc), std::move(placement), std::move(routes));
}

// ---------------------------------------------------------------------------
// Random connected graphs

inline Network random_connected(std::mt19937_64& rng, std::size_t n, double extra_edge_p, NodeVec cap = {32, 64},
                                double bw = 5) {
  std::vector<Edge> edges;
  std::uniform_real_distribution<double> u01(0, 1);
  std::uniform_int_distribution<int> delay(1, 5);
  // random spanning tree, then extra edges
  for (NodeId i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    edges.push_back({parent(rng), i, bw, static_cast<double>(delay(rng))});
  }
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b) {
      bool exists = false;
      for (auto& e : edges) exists = exists || (std::min(e.u, e.v) == a && std::max(e.u, e.v) == b);
      if (!exists && u01(rng) < extra_edge_p) edges.push_back({a, b, bw, static_cast<double>(delay(rng))});
    }
  return make_net(std::vector<NodeVec>(n, cap), edges);
}

/// Utilizations drawn uniformly in [0, fill * capacity].
inline UtilSnapshot random_snapshot(std::mt19937_64& rng, const Network& net, double fill = 1.0) {
  std::uniform_real_distribution<double> u01(0, 1);
  UtilSnapshot s;
  for (const auto& n : net.nodes()) s.node.push_back({u01(rng) * fill * n.capacity[0], u01(rng) * fill * n.capacity[1]});
  for (const auto& l : net.links()) s.link.push_back({u01(rng) * fill * l.capacity[0]});
  return s;
}

// ---------------------------------------------------------------------------
// Reference oracles (no use of library traversal helpers)

inline std::optional<LinkId> ref_link(const Network& net, NodeId a, NodeId b) {
  for (const auto& l : net.links())
    if ((l.u == a && l.v == b) || (l.u == b && l.v == a)) return l.id;
  return std::nullopt;
}

inline std::vector<std::vector<std::size_t>> ref_hops(const Network& net) {
  const std::size_t n = net.node_count();
  const std::size_t inf = std::numeric_limits<std::size_t>::max() / 4;
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  for (NodeId i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& l : net.links()) d[l.u][l.v] = d[l.v][l.u] = 1;
  for (NodeId k = 0; k < n; ++k)
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

/// All node sequences of k+1 distinct nodes starting at n with consecutive nodes adjacent.
inline std::vector<std::vector<NodeId>> ref_paths(const Network& net, NodeId n, std::size_t k) {
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> seq = {n};
  std::function<void()> rec = [&] {
    if (seq.size() == k + 1) {
      out.push_back(seq);
      return;
    }
    for (NodeId x = 0; x < net.node_count(); ++x) {
      if (std::find(seq.begin(), seq.end(), x) != seq.end()) continue;
      if (!ref_link(net, seq.back(), x)) continue;
      seq.push_back(x);
      rec();
      seq.pop_back();
    }
  };
  if (k > 0) rec();
  return out;
}

/// Straight-line evaluation of the maximum weighted fragmentation level.
inline double ref_max_frag(const Network& net, const UtilSnapshot& s, std::size_t K, double q) {
  const std::size_t N = net.node_count();
  const auto hops = ref_hops(net);
  double a_cpu_u = 0, a_cpu_c = 0, a_mem_u = 0, a_mem_c = 0, a_bw_u = 0, a_bw_c = 0;
  for (NodeId i = 0; i < N; ++i) {
    a_cpu_u += s.node[i][0];
    a_cpu_c += net.node(i).capacity[0];
    a_mem_u += s.node[i][1];
    a_mem_c += net.node(i).capacity[1];
  }
  for (LinkId e = 0; e < net.link_count(); ++e) {
    a_bw_u += s.link[e][0];
    a_bw_c += net.link(e).capacity[0];
  }
  const double alpha[3] = {a_cpu_u / a_cpu_c, a_mem_u / a_mem_c, a_bw_c > 0 ? a_bw_u / a_bw_c : 0.0};
  const double asum = alpha[0] + alpha[1] + alpha[2];
  if (asum == 0) return 1.0;
  auto res_node = [&](NodeId i, int d) { return std::max(0.0, net.node(i).capacity[d] - s.node[i][d]); };
  auto res_link = [&](LinkId e) { return std::max(0.0, net.link(e).capacity[0] - s.link[e][0]); };
  double best = 0;
  for (NodeId n = 0; n < N; ++n) {
    double num = 0, den = 0;
    for (std::size_t k = 0; k <= K; ++k) {
      double eta[3] = {0, 0, 0};
      if (k == 0) {
        eta[0] = res_node(n, 0);
        eta[1] = res_node(n, 1);
      } else {
        double c0 = 0, c1 = 0;
        int cnt = 0;
        for (NodeId m = 0; m < N; ++m)
          if (hops[n][m] == k) {
            c0 += res_node(m, 0);
            c1 += res_node(m, 1);
            ++cnt;
          }
        if (cnt) eta[0] = c0 / cnt, eta[1] = c1 / cnt;
        auto paths = ref_paths(net, n, k);
        double cp = 0;
        for (const auto& p : paths) {
          double mn = std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i + 1 < p.size(); ++i) mn = std::min(mn, res_link(*ref_link(net, p[i], p[i + 1])));
          cp += mn;
        }
        if (!paths.empty()) eta[2] = cp / static_cast<double>(paths.size());
      }
      double level = 0;
      for (int d = 0; d < 3; ++d) level += alpha[d] * (1.0 / (eta[d] + 1.0));
      level /= asum;
      const double beta = std::pow(q, static_cast<double>(k));
      num += beta * level;
      den += beta;
    }
    best = std::max(best, num / den);
  }
  return best;
}

}  // namespace fixtures
