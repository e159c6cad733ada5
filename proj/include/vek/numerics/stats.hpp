#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "vek/error.hpp"

namespace vek {

/// 1-based ranks with ties given the average of the positions they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::dimension, "pearson inputs differ in length");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  require(saa > 0.0 && sbb > 0.0, Errc::zero_variance, "correlation of a constant sequence");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Spearman's rho: Pearson correlation of average-tie ranks.
inline double spearman_rho(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::dimension,
          "spearman inputs differ in length (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  require(a.size() >= 3, Errc::dimension, "spearman needs at least 3 points");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

/// Two-sided p-value of a correlation under the t approximation with n-2
/// degrees of freedom.
inline double correlation_p_value(double rho, std::size_t n) {
  if (n < 3) return 1.0;
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

/// Average precision of `scores` against binary `gold`. Ranking is by score
/// descending with ties broken by ascending index.
inline double average_precision(std::span<const int> gold, std::span<const double> scores) {
  require(gold.size() == scores.size(), Errc::dimension, "gold and scores differ in length");
  const auto positives = std::count_if(gold.begin(), gold.end(), [](int g) { return g != 0; });
  require(positives > 0, Errc::no_positives, "gold mask has no positive entries");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (gold[order[rank]] == 0) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  return sum / static_cast<double>(positives);
}

/// (v - min) / (max - min); a constant input maps to zeros.
inline std::vector<double> minmax_scale(std::span<const double> v) {
  require(!v.empty(), Errc::dimension, "minmax_scale of an empty sequence");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  std::vector<double> out(v.size(), 0.0);
  if (range == 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / range;
  return out;
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace vek
