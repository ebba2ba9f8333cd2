#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fragmig/common.hpp"
#include "fragmig/state.hpp"
#include "fragmig/topology.hpp"

namespace fragmig {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline constexpr std::size_t kNodeFeatureWidth = 2 * kNodeDims;
inline constexpr std::size_t kEdgeFeatureWidth = 2 * kLinkDims;

// ---------------------------------------------------------------------------
// Input tensors

/// Row i: [demand_v / capacity_i | utilization_i / capacity_i].
inline Matrix build_node_features(const Network& net, const UtilSnapshot& s, const NodeVec& demand) {
  Matrix x(net.node_count(), kNodeFeatureWidth);
  for (NodeId n = 0; n < net.node_count(); ++n) {
    const auto& cap = net.node(n).capacity;
    for (std::size_t i = 0; i < kNodeDims; ++i) {
      x(n, i) = demand[i] / cap[i];
      x(n, kNodeDims + i) = s.node[n][i] / cap[i];
    }
  }
  return x;
}

inline Matrix build_node_features(const NetworkState& state, VnfRef v) {
  return build_node_features(state.network(), state.snapshot(), state.demand(v));
}

/// Summed bandwidth demand of every VNF link touching v (divided by their count
/// in average mode).
inline LinkVec adjacent_link_demand(const NetworkState& state, VnfRef v, bool average) {
  LinkVec total{};
  const auto adjacent = state.adjacent_links(v);
  for (const auto& l : adjacent) total += state.demand(l);
  if (average && !adjacent.empty())
    for (auto& x : total) x /= static_cast<double>(adjacent.size());
  return total;
}

/// Rows 2e and 2e+1 (both directions of link e): [link demand / capacity | utilization / capacity].
inline Matrix build_edge_features(const Network& net, const UtilSnapshot& s, const LinkVec& link_demand) {
  Matrix e(2 * net.link_count(), kEdgeFeatureWidth);
  for (LinkId l = 0; l < net.link_count(); ++l) {
    const auto& cap = net.link(l).capacity;
    for (std::size_t i = 0; i < kLinkDims; ++i) {
      const double need = link_demand[i] / cap[i];
      const double used = s.link[l][i] / cap[i];
      for (std::size_t dir = 0; dir < 2; ++dir) {
        e(2 * l + dir, i) = need;
        e(2 * l + dir, kLinkDims + i) = used;
      }
    }
  }
  return e;
}

inline Matrix build_edge_features(const NetworkState& state, VnfRef v, bool average = false) {
  return build_edge_features(state.network(), state.snapshot(), adjacent_link_demand(state, v, average));
}

// ---------------------------------------------------------------------------
// Parameters

struct GatParams {
  Matrix weight;    // (heads * head_dim) x in_dim
  Matrix att_src;   // heads x head_dim
  Matrix att_dst;   // heads x head_dim
  Matrix att_edge;  // heads x edge_dim (edge_dim may be 0)
};

struct LinearParams {
  Matrix weight;  // out x in
  Matrix bias;    // out x 1
};

inline constexpr std::size_t kGatLayers = 3;
inline constexpr std::size_t kLinearLayers = 3;
inline constexpr double kOutputInitScale = 0.1;  // output weights lie in +-scale/sqrt(hidden)

struct MhgatParams {
  std::array<GatParams, kGatLayers> gat;
  std::array<LinearParams, kLinearLayers> linear;

  template <typename F>
  void visit(F&& f) {
    for (std::size_t l = 0; l < kGatLayers; ++l) {
      const std::string p = "gat" + std::to_string(l) + ".";
      f(p + "weight", gat[l].weight);
      f(p + "att_src", gat[l].att_src);
      f(p + "att_dst", gat[l].att_dst);
      f(p + "att_edge", gat[l].att_edge);
    }
    for (std::size_t l = 0; l < kLinearLayers; ++l) {
      const std::string p = "linear" + std::to_string(l) + ".";
      f(p + "weight", linear[l].weight);
      f(p + "bias", linear[l].bias);
    }
  }

  template <typename F>
  void visit(F&& f) const {
    const_cast<MhgatParams*>(this)->visit([&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }

  /// Same shapes, all zeros.
  MhgatParams zeros_like() const {
    MhgatParams z = *this;
    z.visit([](const std::string&, Matrix& m) { m.zero(); });
    return z;
  }

  std::size_t size() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Matrix& m) { n += m.data.size(); });
    return n;
  }
};

/// Affine input standardization, (x - shift) / scale per feature column.
/// The default is the identity; training fits it on the training split.
struct FeatureScaler {
  std::array<double, kNodeFeatureWidth> node_shift{}, node_scale{1, 1, 1, 1};
  std::array<double, kEdgeFeatureWidth> edge_shift{}, edge_scale{1, 1};

  Matrix apply_nodes(const Matrix& x) const { return apply(x, node_shift, node_scale); }
  Matrix apply_edges(const Matrix& e) const { return apply(e, edge_shift, edge_scale); }

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;

 private:
  template <std::size_t W>
  static Matrix apply(const Matrix& m, const std::array<double, W>& shift, const std::array<double, W>& scale) {
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows; ++r)
      for (std::size_t c = 0; c < W && c < m.cols; ++c) out(r, c) = (m(r, c) - shift[c]) / scale[c];
    return out;
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FeatureScaler, node_shift, node_scale, edge_shift, edge_scale)

struct MhgatConfig {
  std::size_t heads = 4;
  std::size_t head_dim = 8;
  std::size_t hidden = 16;     // width of the second linear layer
  double leak = 0.2;           // LeakyReLU slope on attention scores
  bool disable_gat = false;    // uniform neighbor averaging instead of attention
  bool disable_residual = false;
  bool disable_multihop = false;  // every layer runs on the base graph
  bool average_edge_demand = false;

  std::size_t width() const { return heads * head_dim; }
  friend bool operator==(const MhgatConfig&, const MhgatConfig&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MhgatConfig, heads, head_dim, hidden, leak, disable_gat,
                                                disable_residual, disable_multihop, average_edge_demand)

/// Neighborhoods used by one GAT layer. nbrs[i] starts with i itself (self-loop);
/// edge_rows[i][k] is the edge-tensor row of (i -> nbrs[i][k]) or -1.
struct AttentionGraph {
  std::vector<std::vector<NodeId>> nbrs;
  std::vector<std::vector<long>> edge_rows;
};

inline AttentionGraph attention_graph(const Network& net, const MultiHopGraph& g) {
  AttentionGraph ag;
  const std::size_t n = net.node_count();
  ag.nbrs.assign(n, {});
  ag.edge_rows.assign(n, {});
  for (NodeId i = 0; i < n; ++i) {
    ag.nbrs[i].push_back(i);
    ag.edge_rows[i].push_back(-1);
    for (NodeId j : g.neighbors[i]) {
      ag.nbrs[i].push_back(j);
      long row = -1;
      if (g.hops == 1) {
        if (auto e = net.link_between(i, j)) row = static_cast<long>(2 * *e + (net.link(*e).u == i ? 0 : 1));
      }
      ag.edge_rows[i].push_back(row);
    }
  }
  return ag;
}

// ---------------------------------------------------------------------------
// GAT layer

struct GatTrace {
  Matrix input;
  Matrix z;    // projected features
  Matrix pre;  // attention-weighted sums before ELU
  Matrix out;
  // Per node, per head, per neighbor: score before LeakyReLU and attention weight.
  std::vector<std::vector<double>> score;  // [node][head * deg + k]
  std::vector<std::vector<double>> alpha;
};

inline double elu(double x) { return x > 0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x > 0 ? 1.0 : std::exp(x); }

/// One multi-head edge-aware attention layer. `edges` may be null (no edge term).
inline GatTrace gat_layer_forward(const GatParams& p, std::size_t heads, std::size_t head_dim, double leak,
                                  bool uniform, const Matrix& x, const Matrix* edges, const AttentionGraph& g) {
  const std::size_t n = x.rows;
  const std::size_t width = heads * head_dim;
  if (p.weight.rows != width || p.weight.cols != x.cols) throw ConfigError("gat layer: input width mismatch");
  if (edges && p.att_edge.cols != edges->cols) throw ConfigError("gat layer: edge width mismatch");
  GatTrace t;
  t.input = x;
  t.z = Matrix(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t r = 0; r < width; ++r) {
      const double* w = &p.weight.data[r * x.cols];
      double acc = 0;
      for (std::size_t c = 0; c < x.cols; ++c) acc += w[c] * xi[c];
      t.z(i, r) = acc;
    }
  }
  // per-node source/destination projections per head
  std::vector<double> src(n * heads), dst(n * heads);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t h = 0; h < heads; ++h) {
      double a = 0, b = 0;
      for (std::size_t d = 0; d < head_dim; ++d) {
        a += p.att_src(h, d) * t.z(i, h * head_dim + d);
        b += p.att_dst(h, d) * t.z(i, h * head_dim + d);
      }
      src[i * heads + h] = a;
      dst[i * heads + h] = b;
    }

  t.pre = Matrix(n, width);
  t.out = Matrix(n, width);
  t.score.assign(n, {});
  t.alpha.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = g.nbrs[i];
    const std::size_t deg = nb.size();
    t.score[i].assign(heads * deg, 0.0);
    t.alpha[i].assign(heads * deg, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
      double* s = &t.score[i][h * deg];
      double* a = &t.alpha[i][h * deg];
      if (uniform) {
        for (std::size_t k = 0; k < deg; ++k) a[k] = 1.0 / static_cast<double>(deg);
      } else {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < deg; ++k) {
          double e = src[i * heads + h] + dst[nb[k] * heads + h];
          const long row = g.edge_rows[i][k];
          if (edges && row >= 0)
            for (std::size_t c = 0; c < edges->cols; ++c) e += p.att_edge(h, c) * (*edges)(static_cast<std::size_t>(row), c);
          s[k] = e;
          a[k] = e > 0 ? e : leak * e;
          mx = std::max(mx, a[k]);
        }
        double sum = 0;
        for (std::size_t k = 0; k < deg; ++k) {
          a[k] = std::exp(a[k] - mx);
          sum += a[k];
        }
        for (std::size_t k = 0; k < deg; ++k) a[k] /= sum;
      }
      for (std::size_t k = 0; k < deg; ++k)
        for (std::size_t d = 0; d < head_dim; ++d) t.pre(i, h * head_dim + d) += a[k] * t.z(nb[k], h * head_dim + d);
    }
    for (std::size_t r = 0; r < width; ++r) t.out(i, r) = elu(t.pre(i, r));
  }
  return t;
}

/// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
inline Matrix gat_layer_backward(const GatParams& p, std::size_t heads, std::size_t head_dim, double leak, bool uniform,
                                 const GatTrace& t, const Matrix* edges, const AttentionGraph& g, const Matrix& d_out,
                                 GatParams& grad) {
  const std::size_t n = t.input.rows;
  const std::size_t width = heads * head_dim;
  Matrix d_pre(n, width);
  for (std::size_t k = 0; k < d_pre.data.size(); ++k) d_pre.data[k] = d_out.data[k] * elu_grad(t.pre.data[k]);

  Matrix d_z(n, width);
  std::vector<double> d_src(n * heads, 0.0), d_dst(n * heads, 0.0);
  std::vector<double> d_alpha;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nb = g.nbrs[i];
    const std::size_t deg = nb.size();
    d_alpha.assign(deg, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
      const double* a = &t.alpha[i][h * deg];
      const double* s = &t.score[i][h * deg];
      const double* dp = &d_pre.data[i * width + h * head_dim];
      for (std::size_t k = 0; k < deg; ++k) {
        double* dz = &d_z.data[nb[k] * width + h * head_dim];
        const double* z = &t.z.data[nb[k] * width + h * head_dim];
        double da = 0;
        for (std::size_t d = 0; d < head_dim; ++d) {
          dz[d] += a[k] * dp[d];
          da += dp[d] * z[d];
        }
        d_alpha[k] = da;
      }
      if (uniform) continue;
      double dot = 0;
      for (std::size_t k = 0; k < deg; ++k) dot += a[k] * d_alpha[k];
      for (std::size_t k = 0; k < deg; ++k) {
        const double dg = a[k] * (d_alpha[k] - dot);
        const double ds = dg * (s[k] > 0 ? 1.0 : leak);
        d_src[i * heads + h] += ds;
        d_dst[nb[k] * heads + h] += ds;
        const long row = g.edge_rows[i][k];
        if (edges && row >= 0)
          for (std::size_t c = 0; c < edges->cols; ++c) grad.att_edge(h, c) += ds * (*edges)(static_cast<std::size_t>(row), c);
      }
    }
  }
  if (!uniform) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t h = 0; h < heads; ++h) {
        const double gs = d_src[i * heads + h], gd = d_dst[i * heads + h];
        for (std::size_t d = 0; d < head_dim; ++d) {
          const std::size_t r = h * head_dim + d;
          grad.att_src(h, d) += gs * t.z(i, r);
          grad.att_dst(h, d) += gd * t.z(i, r);
          d_z(i, r) += gs * p.att_src(h, d) + gd * p.att_dst(h, d);
        }
      }
  }
  const std::size_t in = t.input.cols;
  Matrix d_x(n, in);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = t.input.row(i);
    auto dxi = d_x.row(i);
    for (std::size_t r = 0; r < width; ++r) {
      const double dz = d_z(i, r);
      if (dz == 0) continue;
      double* gw = &grad.weight.data[r * in];
      const double* w = &p.weight.data[r * in];
      for (std::size_t c = 0; c < in; ++c) {
        gw[c] += dz * xi[c];
        dxi[c] += dz * w[c];
      }
    }
  }
  return d_x;
}

// ---------------------------------------------------------------------------
// Model

struct MhgatTrace {
  Matrix edges;  // standardized edge features
  std::array<GatTrace, kGatLayers> gat;
  Matrix o1, o2, o2_res, o3, o3_res;
  std::array<Matrix, kLinearLayers> affine;  // pre-activation of each linear layer
  std::array<Matrix, kLinearLayers> act;     // ReLU outputs; act[2] is the model output
  std::vector<double> output;
};

class MhgatModel {
 public:
  MhgatModel() = default;

  /// Zero-initialized model bound to `net`.
  MhgatModel(const Network& net, MhgatConfig cfg)
      : cfg_(cfg), nodes_(net.node_count()), links_(net.link_count()), topology_hash_(net.structure_fingerprint()) {
    if (cfg_.heads == 0 || cfg_.head_dim == 0 || cfg_.hidden == 0) throw ConfigError("mhgat: zero layer width");
    build_graphs(net);
    const std::size_t w = cfg_.width();
    for (std::size_t l = 0; l < kGatLayers; ++l) {
      const std::size_t in = l == 0 ? kNodeFeatureWidth : w;
      auto& g = params_.gat[l];
      g.weight = Matrix(w, in);
      g.att_src = Matrix(cfg_.heads, cfg_.head_dim);
      g.att_dst = Matrix(cfg_.heads, cfg_.head_dim);
      g.att_edge = Matrix(cfg_.heads, l == 0 ? kEdgeFeatureWidth : 0);
    }
    const std::array<std::size_t, kLinearLayers + 1> widths = {w, w, cfg_.hidden, 1};
    for (std::size_t l = 0; l < kLinearLayers; ++l) {
      params_.linear[l].weight = Matrix(widths[l + 1], widths[l]);
      params_.linear[l].bias = Matrix(widths[l + 1], 1);
    }
  }

  /// Glorot-uniform GAT weights, He-uniform hidden linear weights, a narrow
  /// output layer and zero biases except the output bias, which starts at 0.5.
  /// Together these keep every output ReLU active at initialization.
  static MhgatModel create(const Network& net, MhgatConfig cfg, std::uint64_t seed) {
    MhgatModel m(net, cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&](Matrix& mat, double limit) {
      std::uniform_real_distribution<double> u(-limit, limit);
      for (auto& x : mat.data) x = u(rng);
    };
    for (auto& g : m.params_.gat) {
      fill(g.weight, std::sqrt(6.0 / static_cast<double>(g.weight.rows / cfg.heads + g.weight.cols)));
      fill(g.att_src, std::sqrt(6.0 / static_cast<double>(2 * cfg.head_dim + 1)));
      fill(g.att_dst, std::sqrt(6.0 / static_cast<double>(2 * cfg.head_dim + 1)));
      if (g.att_edge.cols) fill(g.att_edge, std::sqrt(6.0 / static_cast<double>(g.att_edge.cols + 1)));
    }
    for (auto& l : m.params_.linear) fill(l.weight, std::sqrt(6.0 / static_cast<double>(l.weight.cols)));
    fill(m.params_.linear.back().weight, kOutputInitScale / std::sqrt(static_cast<double>(cfg.hidden)));
    m.params_.linear.back().bias.data.assign(1, 0.5);
    return m;
  }

  const MhgatConfig& config() const { return cfg_; }
  MhgatParams& params() { return params_; }
  const MhgatParams& params() const { return params_; }
  std::size_t node_count() const { return nodes_; }
  std::size_t link_count() const { return links_; }
  std::uint64_t topology_hash() const { return topology_hash_; }
  const AttentionGraph& graph(std::size_t layer) const { return graphs_.at(layer); }
  const FeatureScaler& scaler() const { return scaler_; }
  void set_scaler(const FeatureScaler& s) { scaler_ = s; }

  MhgatTrace forward(const Matrix& x, const Matrix& edges) const {
    if (x.rows != nodes_ || x.cols != kNodeFeatureWidth) throw ConfigError("mhgat: node feature shape mismatch");
    if (edges.rows != 2 * links_ || edges.cols != kEdgeFeatureWidth) throw ConfigError("mhgat: edge feature shape mismatch");
    MhgatTrace t;
    const bool uni = cfg_.disable_gat;
    const Matrix xs = scaler_.apply_nodes(x);
    t.edges = scaler_.apply_edges(edges);
    t.gat[0] = gat_layer_forward(params_.gat[0], cfg_.heads, cfg_.head_dim, cfg_.leak, uni, xs, &t.edges, graphs_[0]);
    t.o1 = t.gat[0].out;
    t.gat[1] = gat_layer_forward(params_.gat[1], cfg_.heads, cfg_.head_dim, cfg_.leak, uni, t.o1, nullptr, graphs_[1]);
    t.o2 = t.gat[1].out;
    t.o2_res = cfg_.disable_residual ? t.o2 : add(t.o1, t.o2);
    t.gat[2] = gat_layer_forward(params_.gat[2], cfg_.heads, cfg_.head_dim, cfg_.leak, uni, t.o2_res, nullptr, graphs_[2]);
    t.o3 = t.gat[2].out;
    t.o3_res = cfg_.disable_residual ? t.o3 : add(t.o1, t.o3);

    const Matrix* in = &t.o3_res;
    for (std::size_t l = 0; l < kLinearLayers; ++l) {
      const auto& lp = params_.linear[l];
      t.affine[l] = Matrix(nodes_, lp.weight.rows);
      t.act[l] = Matrix(nodes_, lp.weight.rows);
      for (std::size_t i = 0; i < nodes_; ++i)
        for (std::size_t r = 0; r < lp.weight.rows; ++r) {
          double acc = lp.bias.data[r];
          for (std::size_t c = 0; c < lp.weight.cols; ++c) acc += lp.weight(r, c) * (*in)(i, c);
          t.affine[l](i, r) = acc;
          t.act[l](i, r) = std::max(0.0, acc);
        }
      in = &t.act[l];
    }
    t.output = t.act.back().data;
    return t;
  }

  std::vector<double> predict(const Matrix& x, const Matrix& edges) const { return forward(x, edges).output; }

  /// Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
  void backward(const MhgatTrace& t, std::span<const double> d_output, MhgatParams& grad) const {
    Matrix d(nodes_, 1);
    std::copy(d_output.begin(), d_output.end(), d.data.begin());
    for (std::size_t l = kLinearLayers; l-- > 0;) {
      const auto& lp = params_.linear[l];
      auto& lg = grad.linear[l];
      const Matrix& in = l == 0 ? t.o3_res : t.act[l - 1];
      Matrix d_in(nodes_, lp.weight.cols);
      for (std::size_t i = 0; i < nodes_; ++i)
        for (std::size_t r = 0; r < lp.weight.rows; ++r) {
          const double da = t.affine[l](i, r) > 0 ? d(i, r) : 0.0;
          if (da == 0) continue;
          lg.bias.data[r] += da;
          for (std::size_t c = 0; c < lp.weight.cols; ++c) {
            lg.weight(r, c) += da * in(i, c);
            d_in(i, c) += da * lp.weight(r, c);
          }
        }
      d = std::move(d_in);
    }
    const bool uni = cfg_.disable_gat;
    const bool res = !cfg_.disable_residual;
    Matrix d_o1(nodes_, cfg_.width());
    if (res) d_o1 = d;
    Matrix d_o2res = gat_layer_backward(params_.gat[2], cfg_.heads, cfg_.head_dim, cfg_.leak, uni, t.gat[2], nullptr,
                                        graphs_[2], d, grad.gat[2]);
    if (res) accumulate(d_o1, d_o2res);
    Matrix d_o1_from2 = gat_layer_backward(params_.gat[1], cfg_.heads, cfg_.head_dim, cfg_.leak, uni, t.gat[1], nullptr,
                                           graphs_[1], d_o2res, grad.gat[1]);
    accumulate(d_o1, d_o1_from2);
    gat_layer_backward(params_.gat[0], cfg_.heads, cfg_.head_dim, cfg_.leak, uni, t.gat[0], &t.edges, graphs_[0], d_o1,
                       grad.gat[0]);
  }

 private:
  static Matrix add(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    for (std::size_t k = 0; k < c.data.size(); ++k) c.data[k] += b.data[k];
    return c;
  }
  static void accumulate(Matrix& a, const Matrix& b) {
    for (std::size_t k = 0; k < a.data.size(); ++k) a.data[k] += b.data[k];
  }

  void build_graphs(const Network& net) {
    for (std::size_t l = 0; l < kGatLayers; ++l) {
      const std::size_t hops = cfg_.disable_multihop ? 1 : l + 1;
      graphs_[l] = attention_graph(net, derive_multi_hop_graph(net, hops));
    }
  }

  MhgatConfig cfg_;
  std::size_t nodes_ = 0;
  std::size_t links_ = 0;
  std::uint64_t topology_hash_ = 0;
  MhgatParams params_;
  FeatureScaler scaler_;
  std::array<AttentionGraph, kGatLayers> graphs_;
};

// ---------------------------------------------------------------------------
// Checkpoints

inline nlohmann::json save_checkpoint(const MhgatModel& model, const nlohmann::json& hyperparameters = nlohmann::json::object()) {
  nlohmann::json doc;
  doc["format"] = "fragmig-mhgat";
  doc["version"] = 1;
  doc["topology_hash"] = hex64(model.topology_hash());
  doc["nodes"] = model.node_count();
  doc["links"] = model.link_count();
  doc["config"] = model.config();
  doc["hyperparameters"] = hyperparameters;
  doc["feature_scaler"] = model.scaler();
  nlohmann::json params = nlohmann::json::array();
  model.params().visit([&](const std::string& name, const Matrix& m) {
    params.push_back({{"name", name}, {"shape", {m.rows, m.cols}}, {"data", m.data}});
  });
  doc["params"] = std::move(params);
  return doc;
}

/// Restores a model for `net`; refuses checkpoints trained on another topology.
inline MhgatModel load_checkpoint(const nlohmann::json& doc, const Network& net) {
  try {
    if (doc.at("format").get<std::string>() != "fragmig-mhgat") throw CheckpointError("checkpoint: unknown format");
    const auto hash = doc.at("topology_hash").get<std::string>();
    if (hash != hex64(net.structure_fingerprint()))
      throw CheckpointError("checkpoint: topology hash mismatch (checkpoint " + hash + ", topology " +
                            hex64(net.structure_fingerprint()) + ")");
    MhgatModel model(net, doc.at("config").get<MhgatConfig>());
    const auto& params = doc.at("params");
    std::size_t idx = 0;
    model.params().visit([&](const std::string& name, Matrix& m) {
      if (idx >= params.size()) throw CheckpointError("checkpoint: missing parameter " + name);
      const auto& p = params[idx++];
      if (p.at("name").get<std::string>() != name) throw CheckpointError("checkpoint: unexpected parameter order at " + name);
      auto shape = p.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != m.rows || shape[1] != m.cols)
        throw CheckpointError("checkpoint: shape mismatch for " + name);
      auto data = p.at("data").get<std::vector<double>>();
      if (data.size() != m.data.size()) throw CheckpointError("checkpoint: data length mismatch for " + name);
      m.data = std::move(data);
    });
    if (idx != params.size()) throw CheckpointError("checkpoint: unexpected extra parameters");
    if (doc.contains("feature_scaler")) model.set_scaler(doc.at("feature_scaler").get<FeatureScaler>());
    return model;
  } catch (const nlohmann::json::exception& ex) {
    throw CheckpointError(std::string("checkpoint: malformed document: ") + ex.what());
  }
}

}  // namespace fragmig
