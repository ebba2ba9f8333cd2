#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "fragmig/common.hpp"

namespace fragmig {

enum class CorrelationMethod { pearson, spearman, kendall, distance };

inline constexpr std::array<CorrelationMethod, 4> kCorrelationMethods = {
    CorrelationMethod::pearson, CorrelationMethod::spearman, CorrelationMethod::kendall, CorrelationMethod::distance};

inline std::string_view to_string(CorrelationMethod m) {
  switch (m) {
    case CorrelationMethod::pearson: return "pearson";
    case CorrelationMethod::spearman: return "spearman";
    case CorrelationMethod::kendall: return "kendall";
    case CorrelationMethod::distance: return "distance";
  }
  return "?";
}

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ConfigError("correlation: series lengths differ");
  if (x.size() < 3) throw ConfigError("correlation: need at least 3 samples");
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw UndefinedCorrelation("correlation undefined: zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Ranks starting at 1; ties share their average rank.
inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++ties_x;
      } else if (dy == 0) {
        ++ties_y;
      } else if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  const double den = std::sqrt((concordant + discordant + ties_x) * (concordant + discordant + ties_y));
  if (den == 0) throw UndefinedCorrelation("correlation undefined: zero-variance input");
  return std::clamp((concordant - discordant) / den, -1.0, 1.0);
}

inline std::vector<double> centered_distances(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> a(n * n);
  std::vector<double> row(n, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      a[i * n + j] = std::abs(x[i] - x[j]);
      row[i] += a[i * n + j];
    }
  for (auto& r : row) {
    total += r;
    r /= static_cast<double>(n);
  }
  total /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] += total - row[i] - row[j];
  return a;
}

inline double distance_correlation(std::span<const double> x, std::span<const double> y) {
  auto a = centered_distances(x);
  auto b = centered_distances(y);
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  if (aa <= 0 || bb <= 0) throw UndefinedCorrelation("correlation undefined: zero-variance input");
  return std::clamp(std::sqrt(std::max(0.0, ab) / std::sqrt(aa * bb)), 0.0, 1.0);
}

}  // namespace detail

inline double correlate(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
  detail::check_pair(x, y);
  switch (method) {
    case CorrelationMethod::pearson: return detail::pearson(x, y);
    case CorrelationMethod::spearman: {
      auto rx = detail::ranks(x);
      auto ry = detail::ranks(y);
      return detail::pearson(rx, ry);
    }
    case CorrelationMethod::kendall: return detail::kendall_tau_b(x, y);
    case CorrelationMethod::distance: return detail::distance_correlation(x, y);
  }
  throw ConfigError("correlation: unknown method");
}

}  // namespace fragmig
