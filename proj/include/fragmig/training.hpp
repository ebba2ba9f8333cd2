#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"

#include "fragmig/common.hpp"
#include "fragmig/dataset.hpp"
#include "fragmig/mhgat.hpp"

namespace fragmig {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 1;
  bool standardize = true;  // fit input standardization on the training split

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("train: learning rate must be > 0");
    if (batch_size == 0) throw ConfigError("train: batch size must be >= 1");
    if (max_epochs == 0) throw ConfigError("train: max epochs must be >= 1");
    if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1)
      throw ConfigError("train: validation and test fractions must be >= 0 and sum below 1");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, learning_rate, beta1, beta2, epsilon, batch_size,
                                                max_epochs, patience, val_fraction, test_fraction, seed, standardize)

class Adam {
 public:
  Adam(const MhgatParams& like, const TrainConfig& cfg) : cfg_(cfg), m_(like.zeros_like()), v_(like.zeros_like()) {}

  void step(MhgatParams& params, const MhgatParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::vector<Matrix*> ps, gs, ms, vs;
    params.visit([&](const std::string&, Matrix& x) { ps.push_back(&x); });
    const_cast<MhgatParams&>(grad).visit([&](const std::string&, Matrix& x) { gs.push_back(&x); });
    m_.visit([&](const std::string&, Matrix& x) { ms.push_back(&x); });
    v_.visit([&](const std::string&, Matrix& x) { vs.push_back(&x); });
    for (std::size_t k = 0; k < ps.size(); ++k)
      for (std::size_t i = 0; i < ps[k]->data.size(); ++i) {
        const double g = gs[k]->data[i];
        double& m = ms[k]->data[i];
        double& v = vs[k]->data[i];
        m = cfg_.beta1 * m + (1 - cfg_.beta1) * g;
        v = cfg_.beta2 * v + (1 - cfg_.beta2) * g * g;
        ps[k]->data[i] -= cfg_.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg_.epsilon);
      }
  }

  long steps() const { return t_; }

 private:
  TrainConfig cfg_;
  MhgatParams m_, v_;
  long t_ = 0;
};

/// Mean squared error over all nodes of all given records.
inline double evaluate_mse(const MhgatModel& model, const std::vector<DatasetRecord>& records,
                           std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t idx : indices) {
    const auto& r = records[idx];
    auto out = model.predict(r.node_features, r.edge_features);
    for (std::size_t i = 0; i < out.size(); ++i) sum += (out[i] - r.labels[i]) * (out[i] - r.labels[i]);
    count += out.size();
  }
  return sum / static_cast<double>(count);
}

inline double evaluate_mse(const MhgatModel& model, const std::vector<DatasetRecord>& records) {
  std::vector<std::size_t> all(records.size());
  std::iota(all.begin(), all.end(), 0);
  return evaluate_mse(model, records, all);
}

/// Batch loss and its gradient; per-record gradients are summed in record order.
inline double batch_loss_and_grad(const MhgatModel& model, const std::vector<DatasetRecord>& records,
                                  std::span<const std::size_t> batch, MhgatParams& grad) {
  const double scale = 1.0 / static_cast<double>(batch.size() * model.node_count());
  double loss = 0;
  std::vector<double> d_out(model.node_count());
  for (std::size_t idx : batch) {
    const auto& r = records[idx];
    auto trace = model.forward(r.node_features, r.edge_features);
    for (std::size_t i = 0; i < d_out.size(); ++i) {
      const double diff = trace.output[i] - r.labels[i];
      loss += diff * diff * scale;
      d_out[i] = 2.0 * diff * scale;
    }
    model.backward(trace, d_out, grad);
  }
  return loss;
}

/// Per-column population deviation over the given records, with node columns
/// also centered on their mean. Edge columns stay uncentered: self-loops carry
/// no edge term, and a zero-mean edge input would make them indistinguishable
/// from an average edge in the attention scores. Columns with (near) zero
/// deviation keep unit scale.
inline FeatureScaler fit_scaler(const std::vector<DatasetRecord>& records, std::span<const std::size_t> subset) {
  FeatureScaler sc;
  auto fit = [&](auto& shift, auto& scale, auto pick, bool center) {
    const std::size_t w = shift.size();
    std::vector<double> sum(w, 0.0), sq(w, 0.0);
    double count = 0;
    for (std::size_t idx : subset) {
      const Matrix& m = pick(records[idx]);
      for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < w; ++c) sum[c] += m(r, c);
        count += 1;
      }
    }
    if (count == 0) return;
    for (std::size_t c = 0; c < w; ++c) shift[c] = sum[c] / count;
    for (std::size_t idx : subset) {
      const Matrix& m = pick(records[idx]);
      for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < w; ++c) sq[c] += (m(r, c) - shift[c]) * (m(r, c) - shift[c]);
    }
    for (std::size_t c = 0; c < w; ++c) {
      const double sd = std::sqrt(sq[c] / count);
      scale[c] = sd > 1e-9 ? sd : 1.0;
      if (!center) shift[c] = 0.0;
    }
  };
  fit(sc.node_shift, sc.node_scale, [](const DatasetRecord& r) -> const Matrix& { return r.node_features; }, true);
  fit(sc.edge_shift, sc.edge_scale, [](const DatasetRecord& r) -> const Matrix& { return r.edge_features; }, false);
  return sc;
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_mse = 0;
  double val_mse = 0;
  double wall_ms = 0;
};

struct DataSplit {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle, then test, validation and training slices in that order.
inline DataSplit split_dataset(std::size_t n, const TrainConfig& cfg) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(cfg.test_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(n)));
  DataSplit s;
  s.test.assign(idx.begin(), idx.begin() + static_cast<long>(n_test));
  s.val.assign(idx.begin() + static_cast<long>(n_test), idx.begin() + static_cast<long>(n_test + n_val));
  s.train.assign(idx.begin() + static_cast<long>(n_test + n_val), idx.end());
  return s;
}

struct TrainResult {
  MhgatModel model;  // parameters of the best validation epoch
  std::vector<EpochStats> curve;
  std::size_t best_epoch = 0;
  double best_val_mse = 0;
  double test_mse = 0;
  DataSplit split;
};

/// Mini-batch Adam on MSE with early stopping on validation MSE.
/// Throws DivergenceError on a non-finite loss.
inline TrainResult train(MhgatModel model, const std::vector<DatasetRecord>& records, const TrainConfig& cfg) {
  cfg.validate();
  if (records.empty()) throw DataError("train: empty dataset");
  for (const auto& r : records)
    if (r.node_features.rows != model.node_count() || r.edge_features.rows != 2 * model.link_count())
      throw DataError("train: record shape does not match the model topology");

  TrainResult res;
  res.split = split_dataset(records.size(), cfg);
  if (res.split.train.empty()) throw DataError("train: no training records after the split");
  const auto& val = res.split.val.empty() ? res.split.train : res.split.val;
  if (cfg.standardize) model.set_scaler(fit_scaler(records, res.split.train));

  Adam adam(model.params(), cfg);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order = res.split.train;
  MhgatParams grad = model.params().zeros_like();
  res.best_val_mse = std::numeric_limits<double>::infinity();
  MhgatParams best = model.params();
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      std::span<const std::size_t> batch(order.data() + b, std::min(cfg.batch_size, order.size() - b));
      grad.visit([](const std::string&, Matrix& m) { m.zero(); });
      const double loss = batch_loss_and_grad(model, records, batch, grad);
      if (!std::isfinite(loss))
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                              std::to_string(b) + " (lr " + format_double(cfg.learning_rate) + ")");
      weighted += loss * static_cast<double>(batch.size());
      adam.step(model.params(), grad);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_mse = weighted / static_cast<double>(order.size());
    st.val_mse = evaluate_mse(model, records, val);
    st.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(st.val_mse)) throw DivergenceError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    res.curve.push_back(st);
    if (st.val_mse < res.best_val_mse) {
      res.best_val_mse = st.val_mse;
      res.best_epoch = epoch;
      best = model.params();
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  model.params() = std::move(best);
  res.test_mse = evaluate_mse(model, records, res.split.test);
  res.model = std::move(model);
  return res;
}

}  // namespace fragmig
