#pragma once

// Subspace alignment between time steps or domains: the closed-form
// unsupervised map, per-class semi-supervised alignment with optional
// cluster cells, and a binary tree of alignments over many steps.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vek/dataio.hpp"
#include "vek/error.hpp"
#include "vek/numerics/kmeans.hpp"
#include "vek/numerics/matrix.hpp"
#include "vek/numerics/neighbors.hpp"
#include "vek/numerics/pca.hpp"

namespace vek::ssa {

inline constexpr int kNoCluster = -1;
inline constexpr std::size_t kDefaultMaxDim = 10;

struct CellKey {
  int label = 0;
  int cluster = kNoCluster;
  auto operator<=>(const CellKey&) const = default;
};

/// Alignment of one class (or one (class, cluster) cell). Source rows map to
/// (x - source_mean) * transform + offset in the joint space.
struct CellAlignment {
  Matrix M;  // C_{S,k}^T C_{T,k}
  Subspace source;
  Subspace target;
  std::vector<double> source_mean;
  Matrix transform;             // p x d
  std::vector<double> offset;   // d
  std::size_t source_count = 0;
  std::size_t target_count = 0;
};

struct AlignmentMap {
  Matrix M;
  Subspace source_subspace;
  Subspace target_subspace;
  std::optional<std::map<CellKey, CellAlignment>> per_class;
  // semi-supervised only
  std::vector<int> target_labels;  // seeds plus 1-NN pseudo-labels
  std::vector<int> source_clusters;
  std::vector<int> target_clusters;

  std::size_t dim() const noexcept { return M.cols(); }
};

inline AlignmentMap align_unsupervised(const Subspace& source, const Subspace& target) {
  require(source.dim() == target.dim(), Errc::dimension,
          "subspace dimensions differ: " + std::to_string(source.dim()) + " vs " + std::to_string(target.dim()));
  require(source.ambient() == target.ambient(), Errc::dimension,
          "ambient dimensions differ: " + std::to_string(source.ambient()) + " vs " +
              std::to_string(target.ambient()));
  AlignmentMap out;
  out.M = source.components.transpose() * target.components;
  out.source_subspace = source;
  out.target_subspace = target;
  return out;
}

/// Aligned source coordinates (X_s - mean_S) C_S M and target coordinates
/// (X_t - mean_T) C_T.
inline std::pair<Matrix, Matrix> project_aligned(const Matrix& xs, const Matrix& xt, const AlignmentMap& map) {
  return {project(xs, map.source_subspace) * map.M, project(xt, map.target_subspace)};
}

inline Matrix target_coordinates(const AlignmentMap& map, const Matrix& xt) { return project(xt, map.target_subspace); }

namespace detail {

inline std::vector<std::size_t> rows_where(std::size_t n, auto&& pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (pred(i)) out.push_back(i);
  return out;
}

inline CellAlignment fit_cell(const Matrix& xs, const Matrix& xt, const Matrix& target_joint, const Subspace& target_global,
                              std::size_t d) {
  CellAlignment cell;
  cell.source_count = xs.rows();
  cell.target_count = xt.rows();
  const std::size_t p = xs.cols();
  const std::size_t dk = std::min({d, achievable_dim(xs), achievable_dim(xt)});
  if (dk == 0) {
    cell.source_mean = column_means(xs);
    cell.transform = Matrix(p, target_global.dim());
    cell.M = Matrix(0, 0);
  } else {
    cell.source = pca_fit(xs, dk);
    cell.target = pca_fit(xt, dk);
    cell.M = cell.source.components.transpose() * cell.target.components;
    cell.source_mean = cell.source.mean;
    cell.transform = cell.source.components * cell.M * cell.target.components.transpose() * target_global.components;
  }
  cell.offset = column_means(target_joint);
  return cell;
}

inline std::vector<int> nearest_clusters(const Matrix& x, const Matrix& centroids) {
  std::vector<int> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = static_cast<int>(nearest_centroid(x.row(i), centroids));
  return out;
}

}  // namespace detail

/// 1-NN pseudo-labels for every target row from the seed rows; seeds keep
/// their labels.
inline std::vector<int> pseudo_label(const Matrix& xt, const std::vector<std::optional<int>>& seeds) {
  const auto seed_rows = detail::rows_where(xt.rows(), [&](std::size_t i) { return seeds[i].has_value(); });
  require(!seed_rows.empty(), Errc::missing_class_seed, "target has no labelled instance");
  std::vector<int> seed_labels;
  for (std::size_t i : seed_rows) seed_labels.push_back(*seeds[i]);
  auto out = nn1_classify(xt.select_rows(seed_rows), seed_labels, xt);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (seeds[i]) out[i] = *seeds[i];
  return out;
}

/// Per-class alignment. `d` = 0 selects min(10, rank). Cluster ids, when
/// given, split each class into (class, cluster) cells; cells with fewer
/// than two rows on either side use the class-level alignment.
inline AlignmentMap align_semisupervised(const Matrix& xs, const std::vector<int>& ys, const Matrix& xt,
                                         const std::vector<std::optional<int>>& seeds, std::size_t d,
                                         const std::vector<int>* source_clusters = nullptr,
                                         const std::vector<int>* target_clusters = nullptr) {
  require(xs.cols() == xt.cols(), Errc::dimension,
          "source has " + std::to_string(xs.cols()) + " features, target " + std::to_string(xt.cols()));
  require(ys.size() == xs.rows(), Errc::dimension, "source labels do not match source rows");
  require(seeds.size() == xt.rows(), Errc::dimension, "target seeds do not match target rows");
  require((source_clusters == nullptr) == (target_clusters == nullptr), Errc::invalid_argument,
          "cluster ids must be given for both sides or neither");
  if (source_clusters) {
    require(source_clusters->size() == xs.rows() && target_clusters->size() == xt.rows(), Errc::dimension,
            "cluster ids do not match rows");
  }

  const std::set<int> classes(ys.begin(), ys.end());
  for (int k : classes) {
    const bool seeded = std::any_of(seeds.begin(), seeds.end(), [k](const auto& s) { return s == k; });
    if (!seeded) fail(Errc::missing_class_seed, "class " + std::to_string(k) + " has no labelled target instance");
  }
  for (const auto& s : seeds)
    if (s && !classes.contains(*s))
      fail(Errc::insufficient_class_samples, "class " + std::to_string(*s) + " has 0 source instances");

  AlignmentMap out;
  out.target_labels = pseudo_label(xt, seeds);
  for (int k : classes) {
    const auto ns = static_cast<std::size_t>(std::count(ys.begin(), ys.end(), k));
    const auto nt = static_cast<std::size_t>(std::count(out.target_labels.begin(), out.target_labels.end(), k));
    if (ns < 2 || nt < 2)
      fail(Errc::insufficient_class_samples, "class " + std::to_string(k) + " has " + std::to_string(std::min(ns, nt)) +
                                                 (ns < 2 ? " source" : " target") + " instances, need 2");
  }

  const std::size_t rank = std::min(achievable_dim(xs), achievable_dim(xt));
  const std::size_t dim = d == 0 ? std::min(kDefaultMaxDim, rank) : d;
  require(dim >= 1, Errc::degenerate_data, "source or target data has rank 0");
  out.source_subspace = pca_fit(xs, dim);
  out.target_subspace = pca_fit(xt, dim);
  out.M = out.source_subspace.components.transpose() * out.target_subspace.components;

  const Matrix joint = project(xt, out.target_subspace);
  std::map<CellKey, CellAlignment> cells;
  auto add_cell = [&](CellKey key, const std::vector<std::size_t>& rs, const std::vector<std::size_t>& rt) {
    cells.emplace(key, detail::fit_cell(xs.select_rows(rs), xt.select_rows(rt), joint.select_rows(rt),
                                        out.target_subspace, dim));
  };
  for (int k : classes) {
    const auto rs = detail::rows_where(xs.rows(), [&](std::size_t i) { return ys[i] == k; });
    const auto rt = detail::rows_where(xt.rows(), [&](std::size_t i) { return out.target_labels[i] == k; });
    add_cell({k, kNoCluster}, rs, rt);
    if (!source_clusters) continue;
    std::set<int> ids(target_clusters->begin(), target_clusters->end());
    for (int c : ids) {
      const auto cs = detail::rows_where(xs.rows(), [&](std::size_t i) { return ys[i] == k && (*source_clusters)[i] == c; });
      const auto ct = detail::rows_where(
          xt.rows(), [&](std::size_t i) { return out.target_labels[i] == k && (*target_clusters)[i] == c; });
      if (cs.size() >= 2 && ct.size() >= 2) add_cell({k, c}, cs, ct);
    }
  }
  out.per_class = std::move(cells);
  if (source_clusters) {
    out.source_clusters = *source_clusters;
    out.target_clusters = *target_clusters;
  }
  return out;
}

/// Joint-space coordinates of labelled source rows under a semi-supervised map.
inline Matrix align_source(const AlignmentMap& map, const Matrix& xs, const std::vector<int>& ys,
                           const std::vector<int>* clusters = nullptr) {
  require(map.per_class.has_value(), Errc::invalid_argument, "alignment map has no per-class alignments");
  require(xs.cols() == map.source_subspace.ambient(), Errc::dimension, "source feature dimension mismatch");
  require(ys.size() == xs.rows(), Errc::dimension, "source labels do not match source rows");
  Matrix out(xs.rows(), map.dim());
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    auto it = map.per_class->end();
    if (clusters) it = map.per_class->find({ys[i], (*clusters)[i]});
    if (it == map.per_class->end()) it = map.per_class->find({ys[i], kNoCluster});
    if (it == map.per_class->end()) fail(Errc::missing_class, "class " + std::to_string(ys[i]) + " has no alignment");
    const CellAlignment& cell = it->second;
    for (std::size_t c = 0; c < map.dim(); ++c) {
      double v = cell.offset[c];
      for (std::size_t j = 0; j < xs.cols(); ++j) v += (xs(i, j) - cell.source_mean[j]) * cell.transform(j, c);
      out(i, c) = v;
    }
  }
  return out;
}

/// Labels for every row of a labelled-side dataset: visible labels, with the
/// rest filled by 1-NN from the visible rows.
inline std::vector<int> complete_labels(const Matrix& x, const std::vector<std::optional<int>>& visible) {
  return pseudo_label(x, visible);
}

inline std::vector<std::optional<int>> visible_labels(const FeatureDataset& ds) {
  std::vector<std::optional<int>> out;
  out.reserve(ds.size());
  for (const auto& inst : ds.instances()) out.push_back(inst.visible_label());
  return out;
}

/// Final labels for target rows: seeds keep theirs, the rest come from 1-NN
/// over (labelled source rows, seed rows) in a shared coordinate space.
inline std::vector<int> propagate(const Matrix& source, const std::vector<int>& source_labels, const Matrix& target,
                                  const std::vector<std::optional<int>>& seeds,
                                  const std::vector<bool>* source_mask = nullptr) {
  Matrix reference(0, source.cols());
  std::vector<int> labels;
  for (std::size_t i = 0; i < source.rows(); ++i) {
    if (source_mask && !(*source_mask)[i]) continue;
    reference.append_row(source.row(i));
    labels.push_back(source_labels[i]);
  }
  for (std::size_t i = 0; i < target.rows(); ++i) {
    if (!seeds[i]) continue;
    reference.append_row(target.row(i));
    labels.push_back(*seeds[i]);
  }
  auto out = nn1_classify(reference, labels, target);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (seeds[i]) out[i] = *seeds[i];
  return out;
}

struct SemiConfig {
  std::size_t d = 0;  // 0: min(10, rank)
  bool use_clusters = false;
  std::size_t k_clusters = 5;
  std::uint64_t seed = 13;
};

struct Transfer {
  AlignmentMap map;
  Matrix source_coords;  // joint space
  Matrix target_coords;
  std::vector<int> source_labels;
  std::vector<int> predicted;  // per target row
};

namespace detail {

// Cluster ids from k-means on the raw target rows; other rows take the
// nearest target centroid.
inline Matrix cluster_centroids(const Matrix& target_raw, std::size_t k, std::uint64_t seed) {
  return kmeans(target_raw, std::min(k, target_raw.rows()), seed).centroids;
}

inline Transfer transfer(const Matrix& xs, const std::vector<int>& ys, const Matrix& xt,
                         const std::vector<std::optional<int>>& seeds, std::size_t d, const std::vector<int>* cs,
                         const std::vector<int>* ct, const std::vector<bool>* source_mask = nullptr) {
  Transfer out;
  out.map = align_semisupervised(xs, ys, xt, seeds, d, cs, ct);
  out.source_coords = align_source(out.map, xs, ys, cs);
  out.target_coords = target_coordinates(out.map, xt);
  out.source_labels = ys;
  out.predicted = propagate(out.source_coords, ys, out.target_coords, seeds, source_mask);
  return out;
}

}  // namespace detail

/// Semi-supervised transfer between two datasets; source rows without a
/// visible label are completed by 1-NN from the labelled source rows.
inline Transfer transfer(const FeatureDataset& source, const FeatureDataset& target, const SemiConfig& config) {
  const Matrix xs = source.feature_matrix();
  const Matrix xt = target.feature_matrix();
  const auto ys = complete_labels(xs, visible_labels(source));
  const auto seeds = visible_labels(target);
  if (!config.use_clusters) return detail::transfer(xs, ys, xt, seeds, config.d, nullptr, nullptr);
  const Matrix centroids = detail::cluster_centroids(xt, config.k_clusters, config.seed);
  const auto cs = detail::nearest_clusters(xs, centroids);
  const auto ct = detail::nearest_clusters(xt, centroids);
  return detail::transfer(xs, ys, xt, seeds, config.d, &cs, &ct);
}

inline AlignmentMap align_semisupervised(const FeatureDataset& source, const FeatureDataset& target,
                                         const SemiConfig& config) {
  return transfer(source, target, config).map;
}

/// Target predictions with no alignment: 1-NN over raw source rows and raw
/// target seeds.
inline std::vector<int> unaligned_predictions(const FeatureDataset& source, const FeatureDataset& target) {
  const Matrix xs = source.feature_matrix();
  return propagate(xs, complete_labels(xs, visible_labels(source)), target.feature_matrix(), visible_labels(target));
}

/// Accuracy over rows whose label is hidden (flagged unlabelled but carrying
/// a ground-truth label).
inline double hidden_label_accuracy(const FeatureDataset& target, const std::vector<int>& predicted) {
  require(predicted.size() == target.size(), Errc::dimension, "prediction count does not match target rows");
  std::size_t total = 0, hits = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto& inst = target[i];
    if (inst.pu_flag != PuFlag::unlabelled || !inst.label) continue;
    ++total;
    hits += predicted[i] == *inst.label;
  }
  require(total > 0, Errc::invalid_argument, "target has no hidden labels to evaluate");
  return static_cast<double>(hits) / static_cast<double>(total);
}

struct SequenceConfig {
  std::size_t d = 0;
  bool use_clusters = false;  // every join, with ids fixed on the last step's raw features
  std::size_t k_clusters = 5;
  std::uint64_t seed = 13;
};

struct SequenceResult {
  Matrix coords;  // root space
  std::vector<std::string> ids;
  std::vector<std::size_t> step;
  std::vector<int> labels;  // given or propagated
  std::vector<bool> given;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> levels;  // step span of each node

  std::vector<int> step_labels(std::size_t s) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < step.size(); ++i)
      if (step[i] == s) out.push_back(labels[i]);
    return out;
  }
};

namespace detail {

struct Node {
  std::size_t first = 0, last = 0;
  Matrix coords;
  std::vector<std::size_t> step;
  std::vector<std::size_t> global_row;  // into the concatenated input
  std::vector<int> labels;
  std::vector<bool> given;
};

}  // namespace detail

/// Aligns a sequence of steps. Adjacent steps are joined pairwise into joint
/// spaces, adjacent joint spaces are joined again, and so on until one root
/// space remains. The left node is the source of each join; rows of steps
/// covered by the right node take its (target) coordinates.
inline SequenceResult align_sequence(const std::vector<FeatureDataset>& steps, const SequenceConfig& config) {
  require(steps.size() >= 2, Errc::invalid_argument,
          "align_sequence needs at least 2 steps, got " + std::to_string(steps.size()));

  std::vector<int> all_clusters;
  std::vector<std::string> ids;
  std::vector<detail::Node> nodes;
  const Matrix centroids = detail::cluster_centroids(steps.back().feature_matrix(), config.k_clusters, config.seed);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    detail::Node leaf;
    leaf.first = leaf.last = s;
    leaf.coords = steps[s].feature_matrix();
    const auto visible = visible_labels(steps[s]);
    const bool any = std::any_of(visible.begin(), visible.end(), [](const auto& v) { return v.has_value(); });
    if (!any) fail(Errc::missing_class_seed, "step " + std::to_string(s) + " has no labelled instance");
    leaf.labels = complete_labels(leaf.coords, visible);
    for (std::size_t i = 0; i < steps[s].size(); ++i) {
      leaf.step.push_back(s);
      leaf.global_row.push_back(offset + i);
      leaf.given.push_back(visible[i].has_value());
      ids.push_back(steps[s][i].id);
    }
    for (int c : detail::nearest_clusters(leaf.coords, centroids)) all_clusters.push_back(c);
    offset += steps[s].size();
    nodes.push_back(std::move(leaf));
  }

  SequenceResult result;
  while (nodes.size() > 1) {
    const bool clusters = config.use_clusters;
    std::vector<detail::Node> next;
    result.levels.emplace_back();
    for (std::size_t n = 0; n + 1 < nodes.size(); ++n) {
      const detail::Node& left = nodes[n];
      const detail::Node& right = nodes[n + 1];
      std::vector<std::optional<int>> seeds;
      std::vector<int> cs, ct;
      std::vector<bool> left_only;
      for (std::size_t r : left.global_row) cs.push_back(all_clusters[r]);
      for (std::size_t s : left.step) left_only.push_back(s < right.first);
      for (std::size_t i = 0; i < right.global_row.size(); ++i) {
        seeds.push_back(right.given[i] ? std::optional<int>(right.labels[i]) : std::nullopt);
        ct.push_back(all_clusters[right.global_row[i]]);
      }
      const Transfer t = detail::transfer(left.coords, left.labels, right.coords, seeds, config.d,
                                          clusters ? &cs : nullptr, clusters ? &ct : nullptr, &left_only);

      detail::Node joined;
      joined.first = left.first;
      joined.last = right.last;
      joined.coords = Matrix(0, t.target_coords.cols());
      for (std::size_t i = 0; i < left.step.size(); ++i) {
        if (left.step[i] >= right.first) continue;
        joined.coords.append_row(t.source_coords.row(i));
        joined.step.push_back(left.step[i]);
        joined.global_row.push_back(left.global_row[i]);
        joined.labels.push_back(left.labels[i]);
        joined.given.push_back(left.given[i]);
      }
      for (std::size_t i = 0; i < right.step.size(); ++i) {
        joined.coords.append_row(t.target_coords.row(i));
        joined.step.push_back(right.step[i]);
        joined.global_row.push_back(right.global_row[i]);
        joined.labels.push_back(t.predicted[i]);
        joined.given.push_back(right.given[i]);
      }
      result.levels.back().emplace_back(joined.first, joined.last);
      next.push_back(std::move(joined));
    }
    nodes = std::move(next);
  }

  detail::Node& root = nodes.front();
  result.coords = std::move(root.coords);
  result.step = std::move(root.step);
  result.labels = std::move(root.labels);
  result.given = std::move(root.given);
  for (std::size_t r : root.global_row) result.ids.push_back(ids[r]);
  return result;
}

}  // namespace vek::ssa
