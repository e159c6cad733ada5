#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "vek/error.hpp"
#include "vek/numerics/matrix.hpp"

namespace vek {

/// Orthonormal principal-component basis: `components` is p x d with one
/// basis vector per column, eigenvalues are non-increasing, and `mean` is
/// subtracted before projecting.
struct Subspace {
  Matrix components;
  std::vector<double> eigenvalues;
  std::vector<double> mean;

  std::size_t dim() const noexcept { return components.cols(); }
  std::size_t ambient() const noexcept { return components.rows(); }
};

struct SymmetricEigen {
  std::vector<double> values;  // non-increasing
  Matrix vectors;              // columns match `values`
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Deterministic: the
/// rotation order is fixed and no pivoting depends on floating-point ties.
inline SymmetricEigen jacobi_eigen(Matrix a, int max_sweeps = 100) {
  require(a.rows() == a.cols(), Errc::dimension, "eigendecomposition needs a square matrix");
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);

  double total = 0.0;
  for (double x : a.values()) total += x * x;
  const double threshold = 1e-30 * std::max(total, 1e-300);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= threshold) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

/// Sample covariance with the n-1 divisor.
inline Matrix covariance(const Matrix& data, const std::vector<double>& mean) {
  const std::size_t p = data.cols();
  Matrix cov(p, p);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto row = data.row(r);
    for (std::size_t i = 0; i < p; ++i) {
      const double di = row[i] - mean[i];
      for (std::size_t j = i; j < p; ++j) cov(i, j) += di * (row[j] - mean[j]);
    }
  }
  const double denom = static_cast<double>(data.rows() - 1);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      cov(i, j) /= denom;
      cov(j, i) = cov(i, j);
    }
  return cov;
}

// Flip each column so that its largest-magnitude entry is non-negative
// (first such entry on exact ties).
inline void normalize_signs(Matrix& components) {
  for (std::size_t c = 0; c < components.cols(); ++c) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < components.rows(); ++r)
      if (std::abs(components(r, c)) > std::abs(components(best, c))) best = r;
    if (components(best, c) < 0.0)
      for (std::size_t r = 0; r < components.rows(); ++r) components(r, c) = -components(r, c);
  }
}

/// Number of eigenvalues that are numerically non-zero.
inline std::size_t numerical_rank(const std::vector<double>& eigenvalues) {
  if (eigenvalues.empty() || eigenvalues.front() <= 0.0) return 0;
  const double tol = eigenvalues.front() * 1e-10;
  return static_cast<std::size_t>(
      std::count_if(eigenvalues.begin(), eigenvalues.end(), [tol](double v) { return v > tol; }));
}

/// Top-d principal components of the mean-centered data.
inline Subspace pca_fit(const Matrix& data, std::size_t d) {
  require(data.rows() >= 2, Errc::dimension, "pca needs at least 2 rows, got " + std::to_string(data.rows()));
  require(d >= 1 && d <= std::min(data.rows() - 1, data.cols()), Errc::dimension,
          "pca dimension " + std::to_string(d) + " outside [1, " +
              std::to_string(std::min(data.rows() - 1, data.cols())) + "]");

  Subspace out;
  out.mean = column_means(data);
  SymmetricEigen eig = jacobi_eigen(covariance(data, out.mean));

  const std::size_t rank = numerical_rank(eig.values);
  if (rank < d)
    fail(Errc::degenerate_data, "covariance has rank " + std::to_string(rank) + " < requested d=" + std::to_string(d));

  const std::size_t p = data.cols();
  out.components = Matrix(p, d);
  out.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(d));
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < p; ++r) out.components(r, c) = eig.vectors(r, c);
  normalize_signs(out.components);
  return out;
}

/// Largest d accepted by pca_fit for this data (0 when none).
inline std::size_t achievable_dim(const Matrix& data) {
  if (data.rows() < 2) return 0;
  const auto mean = column_means(data);
  return std::min(numerical_rank(jacobi_eigen(covariance(data, mean)).values), std::min(data.rows() - 1, data.cols()));
}

/// (X - mean) * C
inline Matrix project(const Matrix& data, const Subspace& subspace) {
  require(data.cols() == subspace.ambient(), Errc::dimension,
          "data has " + std::to_string(data.cols()) + " columns, subspace ambient dimension is " +
              std::to_string(subspace.ambient()));
  Matrix centered = data;
  for (std::size_t r = 0; r < centered.rows(); ++r)
    for (std::size_t c = 0; c < centered.cols(); ++c) centered(r, c) -= subspace.mean[c];
  return centered * subspace.components;
}

}  // namespace vek
