#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vek/error.hpp"
#include "vek/numerics/matrix.hpp"
#include "vek/random.hpp"

namespace vek {

struct KMeansResult {
  std::vector<std::size_t> assignment;
  Matrix centroids;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_trace;  // after each assignment step
};

inline std::size_t nearest_centroid(std::span<const double> x, const Matrix& centroids, double* distance = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (distance) *distance = best_d;
  return best;
}

namespace detail {

inline Matrix kmeanspp_init(const Matrix& data, std::size_t k, Rng& rng) {
  const std::size_t n = data.rows();
  Matrix centroids(k, data.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  chosen[first] = true;
  std::copy(data.row(first).begin(), data.row(first).end(), centroids.row(0).begin());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(data.row(i), centroids.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i)
        if (!chosen[i]) pick = i;
    }
    chosen[pick] = true;
    std::copy(data.row(pick).begin(), data.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(data.row(i), centroids.row(c)));
  }
  return centroids;
}

}  // namespace detail

/// Lloyd's algorithm from a k-means++ start. Runs until assignments stop
/// changing or `max_iterations` is reached. An empty cluster is re-seeded at
/// the point farthest from its assigned centroid.
inline KMeansResult kmeans(const Matrix& data, std::size_t k, std::uint64_t seed, int max_iterations = 300) {
  require(k >= 1 && k <= data.rows(), Errc::dimension,
          "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(data.rows()) + "]");
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  Rng rng(seed);

  KMeansResult out;
  out.centroids = detail::kmeanspp_init(data, k, rng);
  out.assignment.assign(n, k);  // sentinel: nothing assigned yet

  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest_centroid(data.row(i), out.centroids, &dist[i]);
      inertia += dist[i];
      if (c != out.assignment[i]) changed = true;
      out.assignment[i] = c;
    }
    out.inertia = inertia;
    out.inertia_trace.push_back(inertia);
    out.iterations = iter + 1;
    if (!changed) break;

    Matrix sums(k, p);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(out.assignment[i]);
      auto x = data.row(i);
      for (std::size_t j = 0; j < p; ++j) s[j] += x[j];
      ++counts[out.assignment[i]];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < p; ++j) out.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      taken[far] = true;
      std::copy(data.row(far).begin(), data.row(far).end(), out.centroids.row(c).begin());
    }
  }
  return out;
}

/// Sum of squared distances from each row to its assigned centroid.
inline double kmeans_inertia(const Matrix& data, const std::vector<std::size_t>& assignment, const Matrix& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) total += squared_distance(data.row(i), centroids.row(assignment[i]));
  return total;
}

}  // namespace vek
