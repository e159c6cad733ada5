#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vek/error.hpp"
#include "vek/numerics/matrix.hpp"

namespace vek {

/// Euclidean 1-nearest-neighbour labels; ties go to the lowest reference index.
inline std::vector<int> nn1_classify(const Matrix& reference, std::span<const int> reference_labels,
                                     const Matrix& queries) {
  require(reference.rows() > 0, Errc::empty_reference, "1-NN reference set is empty");
  require(reference_labels.size() == reference.rows(), Errc::dimension, "reference labels do not match rows");
  require(queries.rows() == 0 || queries.cols() == reference.cols(), Errc::dimension,
          "query dimension " + std::to_string(queries.cols()) + " != reference dimension " +
              std::to_string(reference.cols()));
  std::vector<int> out(queries.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < reference.rows(); ++r) {
      const double d = squared_distance(queries.row(q), reference.row(r));
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    out[q] = reference_labels[best];
  }
  return out;
}

}  // namespace vek
