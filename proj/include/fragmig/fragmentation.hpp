#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "fragmig/common.hpp"
#include "fragmig/state.hpp"
#include "fragmig/topology.hpp"

namespace fragmig {

using DimVec = std::array<double, kAllDims>;  // [node dims | link dims]

struct FragParams {
  std::size_t max_field = 2;  // K
  double ratio = 0.5;         // q

  void validate() const {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("fragmentation: q must lie in (0, 1]");
  }
};

/// Rings B^n_k and k-hop path link sets P^n_k for k = 0..K, precomputed once per topology.
class FragmentationContext {
 public:
  FragmentationContext(const Network& net, std::size_t max_field) : net_(&net), max_field_(max_field) {
    const std::size_t n = net.node_count();
    rings_.assign(n, std::vector<std::vector<NodeId>>(max_field + 1));
    paths_.assign(n, std::vector<std::vector<std::vector<LinkId>>>(max_field + 1));
    for (NodeId i = 0; i < n; ++i) {
      auto dist = net.hop_distances(i);
      for (NodeId j = 0; j < n; ++j)
        if (dist[j] <= max_field) rings_[i][dist[j]].push_back(j);
      for (std::size_t k = 1; k <= max_field; ++k)
        for (auto& p : k_hop_paths(net, i, k)) paths_[i][k].push_back(std::move(p.links));
    }
  }

  const Network& network() const { return *net_; }
  std::size_t max_field() const { return max_field_; }
  const std::vector<NodeId>& ring(NodeId n, std::size_t k) const { return rings_.at(n).at(k); }
  const std::vector<std::vector<LinkId>>& paths(NodeId n, std::size_t k) const { return paths_.at(n).at(k); }

 private:
  const Network* net_;
  std::size_t max_field_;
  std::vector<std::vector<std::vector<NodeId>>> rings_;
  std::vector<std::vector<std::vector<std::vector<LinkId>>>> paths_;
};

// Residuals below zero (utilization past capacity) count as zero connectivity.
inline NodeVec node_residual(const Network& net, const UtilSnapshot& s, NodeId n) {
  NodeVec r{};
  for (std::size_t i = 0; i < kNodeDims; ++i) r[i] = std::max(0.0, net.node(n).capacity[i] - s.node[n][i]);
  return r;
}

inline LinkVec link_residual(const Network& net, const UtilSnapshot& s, LinkId e) {
  LinkVec r{};
  for (std::size_t i = 0; i < kLinkDims; ++i) r[i] = std::max(0.0, net.link(e).capacity[i] - s.link[e][i]);
  return r;
}

/// Mean over k-hop paths of the per-path minimum residual bandwidth; zero for
/// k = 0 or when no k-hop path exists.
inline LinkVec path_connectivity(const FragmentationContext& ctx, const UtilSnapshot& s, NodeId n, std::size_t k) {
  LinkVec out{};
  if (k == 0) return out;
  const auto& paths = ctx.paths(n, k);
  if (paths.empty()) return out;
  for (const auto& links : paths) {
    LinkVec m;
    m.fill(std::numeric_limits<double>::infinity());
    for (LinkId e : links) {
      auto r = link_residual(ctx.network(), s, e);
      for (std::size_t i = 0; i < kLinkDims; ++i) m[i] = std::min(m[i], r[i]);
    }
    out += m;
  }
  for (auto& x : out) x /= static_cast<double>(paths.size());
  return out;
}

/// Own residual for k = 0, otherwise the mean residual over the exact-k ring
/// (zero when the ring is empty).
inline NodeVec neighbor_connectivity(const FragmentationContext& ctx, const UtilSnapshot& s, NodeId n, std::size_t k) {
  if (k == 0) return node_residual(ctx.network(), s, n);
  NodeVec out{};
  const auto& ring = ctx.ring(n, k);
  if (ring.empty()) return out;
  for (NodeId b : ring) out += node_residual(ctx.network(), s, b);
  for (auto& x : out) x /= static_cast<double>(ring.size());
  return out;
}

inline DimVec connectivity_vector(const FragmentationContext& ctx, const UtilSnapshot& s, NodeId n, std::size_t k) {
  DimVec eta{};
  auto b = neighbor_connectivity(ctx, s, n, k);
  auto p = path_connectivity(ctx, s, n, k);
  std::copy(b.begin(), b.end(), eta.begin());
  std::copy(p.begin(), p.end(), eta.begin() + kNodeDims);
  return eta;
}

inline DimVec fragment_values(const DimVec& eta) {
  DimVec f{};
  for (std::size_t i = 0; i < kAllDims; ++i) f[i] = 1.0 / (eta[i] + 1.0);
  return f;
}

/// Global utilization over global capacity, per dimension.
inline DimVec resource_weights(const Network& net, const UtilSnapshot& s) {
  DimVec used{}, cap{};
  for (NodeId n = 0; n < net.node_count(); ++n)
    for (std::size_t i = 0; i < kNodeDims; ++i) {
      used[i] += s.node[n][i];
      cap[i] += net.node(n).capacity[i];
    }
  for (LinkId e = 0; e < net.link_count(); ++e)
    for (std::size_t i = 0; i < kLinkDims; ++i) {
      used[kNodeDims + i] += s.link[e][i];
      cap[kNodeDims + i] += net.link(e).capacity[i];
    }
  DimVec alpha{};
  for (std::size_t i = 0; i < kAllDims; ++i) alpha[i] = cap[i] > 0 ? used[i] / cap[i] : 0.0;  // linkless graphs
  return alpha;
}

struct NodeLevel {
  double value = 1.0;
  bool vacuous = false;  // every resource weight was zero
};

/// Alpha-weighted mean over dimensions per ring, then q^k-weighted mean over rings.
/// `fragments` holds one fragment vector per ring k = 0..K.
inline NodeLevel node_fragmentation_level(std::span<const DimVec> fragments, const DimVec& alpha, double q) {
  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  if (!(alpha_sum > 0.0)) return {1.0, true};
  double num = 0.0, den = 0.0, beta = 1.0;
  for (const auto& f : fragments) {
    double level = 0.0;
    for (std::size_t i = 0; i < kAllDims; ++i) level += alpha[i] * f[i];
    num += beta * (level / alpha_sum);
    den += beta;
    beta *= q;
  }
  return {num / den, false};
}

/// Per-node, per-ring, per-dimension fragment values and the derived levels.
struct FragmentationReport {
  int slot = 0;
  std::vector<std::vector<DimVec>> fragments;  // [node][k]
  DimVec alpha{};
  std::vector<double> beta;
  std::vector<double> node_levels;
  double network_max = 1.0;
  bool vacuous = false;

  double mean_level() const {
    return std::accumulate(node_levels.begin(), node_levels.end(), 0.0) / static_cast<double>(node_levels.size());
  }
};

inline FragmentationReport fragmentation_report(const FragmentationContext& ctx, const UtilSnapshot& s,
                                                const FragParams& params, int slot = 0) {
  params.validate();
  if (params.max_field > ctx.max_field()) throw ConfigError("fragmentation: K exceeds the precomputed receptive field");
  const Network& net = ctx.network();
  FragmentationReport rep;
  rep.slot = slot;
  rep.alpha = resource_weights(net, s);
  double beta = 1.0;
  for (std::size_t k = 0; k <= params.max_field; ++k, beta *= params.ratio) rep.beta.push_back(beta);
  rep.fragments.resize(net.node_count());
  rep.node_levels.resize(net.node_count());
  rep.network_max = 0.0;
  for (NodeId n = 0; n < net.node_count(); ++n) {
    for (std::size_t k = 0; k <= params.max_field; ++k)
      rep.fragments[n].push_back(fragment_values(connectivity_vector(ctx, s, n, k)));
    auto level = node_fragmentation_level(rep.fragments[n], rep.alpha, params.ratio);
    rep.node_levels[n] = level.value;
    rep.vacuous = level.vacuous;
    rep.network_max = std::max(rep.network_max, level.value);
  }
  return rep;
}

/// Network maximum of the per-node weighted fragmentation levels.
inline double max_weighted_fragmentation(const FragmentationContext& ctx, const UtilSnapshot& s,
                                         const FragParams& params) {
  return fragmentation_report(ctx, s, params).network_max;
}

inline double max_weighted_fragmentation(const FragmentationContext& ctx, const NetworkState& state,
                                         const FragParams& params) {
  return max_weighted_fragmentation(ctx, state.snapshot(), params);
}

// ---------------------------------------------------------------------------
// Load metrics

struct LoadMetrics {
  double avr_max_util = 0, avr_var = 0, avr_frag = 0;
  double max_max_util = 0, max_var = 0, max_frag = 0;

  static constexpr std::array<const char*, 6> kNames = {"avr_max_util", "avr_var", "avr_frag",
                                                        "max_max_util", "max_var", "max_frag"};
  std::array<double, 6> values() const { return {avr_max_util, avr_var, avr_frag, max_max_util, max_var, max_frag}; }
};

/// per_dim_ratios[d] holds utilization/capacity of every element carrying
/// dimension d. MaxUtil and Var are per-dimension max and population variance,
/// then averaged (Avr) or maximized (Max) across dimensions; Frag uses the
/// node fragmentation levels (mean and network maximum).
inline LoadMetrics load_metric_suite(std::span<const std::vector<double>> per_dim_ratios,
                                     std::span<const double> node_levels) {
  LoadMetrics m;
  if (per_dim_ratios.empty() || node_levels.empty()) throw ConfigError("load metrics: empty input");
  double sum_max = 0, sum_var = 0;
  for (const auto& ratios : per_dim_ratios) {
    if (ratios.empty()) throw ConfigError("load metrics: dimension without elements");
    const double n = static_cast<double>(ratios.size());
    const double mx = *std::max_element(ratios.begin(), ratios.end());
    const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / n;
    double var = 0;
    for (double r : ratios) var += (r - mean) * (r - mean);
    var /= n;
    sum_max += mx;
    sum_var += var;
    m.max_max_util = std::max(m.max_max_util, mx);
    m.max_var = std::max(m.max_var, var);
  }
  const double dims = static_cast<double>(per_dim_ratios.size());
  m.avr_max_util = sum_max / dims;
  m.avr_var = sum_var / dims;
  m.avr_frag = std::accumulate(node_levels.begin(), node_levels.end(), 0.0) / static_cast<double>(node_levels.size());
  m.max_frag = *std::max_element(node_levels.begin(), node_levels.end());
  return m;
}

inline std::vector<std::vector<double>> utilization_ratios(const Network& net, const UtilSnapshot& s) {
  std::vector<std::vector<double>> out(kAllDims);
  for (NodeId n = 0; n < net.node_count(); ++n)
    for (std::size_t i = 0; i < kNodeDims; ++i) out[i].push_back(s.node[n][i] / net.node(n).capacity[i]);
  for (LinkId e = 0; e < net.link_count(); ++e)
    for (std::size_t i = 0; i < kLinkDims; ++i) out[kNodeDims + i].push_back(s.link[e][i] / net.link(e).capacity[i]);
  return out;
}

inline LoadMetrics load_metric_suite(const FragmentationContext& ctx, const UtilSnapshot& s, const FragParams& params) {
  auto report = fragmentation_report(ctx, s, params);
  auto ratios = utilization_ratios(ctx.network(), s);
  return load_metric_suite(ratios, report.node_levels);
}

}  // namespace fragmig
