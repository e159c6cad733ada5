#pragma once

// Positive-unlabelled learning on top of the reference LinearProbModel:
// labelling-frequency estimate, instance weights for unlabelled data,
// duplicated weighted training, prior estimate and positive-unlabelled
// conversion (PUC).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "vek/dataio.hpp"
#include "vek/error.hpp"
#include "vek/numerics/logistic.hpp"
#include "vek/random.hpp"

namespace vek::pu {

inline constexpr double kWeightClip = 1e-6;
inline constexpr int kPositive = 1;
inline constexpr int kNegative = 0;

struct PuEntry {
  std::string id;
  bool labelled = false;
  double p_s = 0.0;  // clipped labelling probability
  double w = 0.0;
  bool converted = false;
};

struct PUWeightTable {
  double c_estimate = 1.0;
  std::optional<double> prior_estimate;
  std::vector<PuEntry> entries;  // dataset order

  const PuEntry* find(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }
  std::size_t conversions() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const PuEntry& e) { return e.converted; }));
  }
};

/// An instance counts as a labelled positive when flagged `labelled`, or
/// when it carries no flag and its label is 1.
inline bool is_labelled(const Instance& inst) {
  if (inst.pu_flag) return *inst.pu_flag == PuFlag::labelled;
  return inst.label == kPositive;
}

/// c = mean probability of the labelled class over validation positives,
/// clipped to [1e-6, 1].
inline double estimate_c(const LinearProbModel& model, const Matrix& validation_positives) {
  require(validation_positives.rows() > 0, Errc::empty_validation, "no validation positives for estimating c");
  double sum = 0.0;
  for (std::size_t i = 0; i < validation_positives.rows(); ++i)
    sum += predict_proba(model, validation_positives.row(i))[kPositive];
  return std::clamp(sum / static_cast<double>(validation_positives.rows()), kWeightClip, 1.0);
}

/// w = (1-c)/c * p/(1-p) with p clipped to [1e-6, 1-1e-6].
inline double instance_weight(double p_s, double c) {
  require(c > 0.0 && c <= 1.0 && std::isfinite(c), Errc::invalid_c, "c must lie in (0, 1], got " + std::to_string(c));
  const double p = std::clamp(p_s, kWeightClip, 1.0 - kWeightClip);
  return (1.0 - c) / c * p / (1.0 - p);
}

/// Per-instance labelling probabilities and weights under `labelling_model`.
inline PUWeightTable compute_weight_table(const FeatureDataset& dataset, const LinearProbModel& labelling_model,
                                          double c) {
  PUWeightTable table;
  table.c_estimate = c;
  table.entries.reserve(dataset.size());
  for (const auto& inst : dataset.instances()) {
    require(inst.features.has_value(), Errc::schema, "instance '" + inst.id + "' has no features");
    const double p = predict_proba(labelling_model, *inst.features)[kPositive];
    PuEntry e;
    e.id = inst.id;
    e.labelled = is_labelled(inst);
    e.p_s = std::clamp(p, kWeightClip, 1.0 - kWeightClip);
    e.w = instance_weight(e.p_s, c);
    table.entries.push_back(std::move(e));
  }
  return table;
}

/// p(y=1) ~ (#labelled + sum of w over unlabelled) / k, clipped to [0, 1].
inline double estimate_prior(const PUWeightTable& table) {
  require(!table.entries.empty(), Errc::dimension, "prior estimate needs a non-empty dataset");
  double sum = 0.0;
  for (const auto& e : table.entries) sum += e.labelled ? 1.0 : e.w;
  return std::clamp(sum / static_cast<double>(table.entries.size()), 0.0, 1.0);
}

inline double estimate_prior(const FeatureDataset& dataset, const LinearProbModel& labelling_model, double c) {
  require(!dataset.empty(), Errc::dimension, "prior estimate needs a non-empty dataset");
  return estimate_prior(compute_weight_table(dataset, labelling_model, c));
}

struct WeightedTrainingSet {
  Matrix features;
  std::vector<int> labels;
  std::vector<double> weights;
  std::vector<std::string> ids;

  double total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
};

/// Labelled and converted instances are emitted once as positives with unit
/// weight; every other unlabelled instance twice, as (positive, w) and
/// (negative, 1-w) with w clamped to [0, 1].
inline WeightedTrainingSet build_weighted_training_set(const FeatureDataset& dataset, const PUWeightTable& weights) {
  std::map<std::string, const PuEntry*> by_id;
  for (const auto& e : weights.entries) by_id[e.id] = &e;

  WeightedTrainingSet out;
  out.features = Matrix(0, dataset.feature_dim());
  auto emit = [&](const Instance& inst, int label, double w) {
    out.features.append_row(*inst.features);
    out.labels.push_back(label);
    out.weights.push_back(w);
    out.ids.push_back(inst.id);
  };
  for (const auto& inst : dataset.instances()) {
    require(inst.features.has_value(), Errc::schema, "instance '" + inst.id + "' has no features");
    if (is_labelled(inst)) {
      emit(inst, kPositive, 1.0);
      continue;
    }
    auto it = by_id.find(inst.id);
    if (it == by_id.end()) fail(Errc::missing_weight, "no weight for unlabelled instance '" + inst.id + "'");
    const PuEntry& e = *it->second;
    if (e.converted) {
      emit(inst, kPositive, 1.0);
      continue;
    }
    const double w = std::clamp(e.w, 0.0, 1.0);
    emit(inst, kPositive, w);
    emit(inst, kNegative, 1.0 - w);
  }
  return out;
}

/// Converts unlabelled instances, highest w first (ties: smaller id), until
/// the positive fraction (labelled + converted over all instances) reaches
/// the prior estimate.
inline PUWeightTable puc_convert(PUWeightTable table) {
  require(table.prior_estimate.has_value(), Errc::invalid_argument, "puc_convert needs a prior estimate");
  const double prior = *table.prior_estimate;
  const double total = static_cast<double>(table.entries.size());

  std::vector<std::size_t> unlabelled;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < table.entries.size(); ++i) {
    table.entries[i].converted = false;
    if (table.entries[i].labelled) ++positives;
    else unlabelled.push_back(i);
  }
  std::sort(unlabelled.begin(), unlabelled.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = table.entries[a];
    const auto& eb = table.entries[b];
    if (ea.w != eb.w) return ea.w > eb.w;
    return ea.id < eb.id;
  });
  for (std::size_t idx : unlabelled) {
    if (static_cast<double>(positives) / total >= prior) break;
    table.entries[idx].converted = true;
    ++positives;
  }
  return table;
}

/// Checks the table invariants; returns a description of the first
/// violation, or nullopt.
inline std::optional<std::string> check_invariants(const PUWeightTable& table) {
  if (!(table.c_estimate > 0.0 && table.c_estimate <= 1.0)) return "c_estimate outside (0, 1]";
  if (table.prior_estimate && (*table.prior_estimate < 0.0 || *table.prior_estimate > 1.0))
    return "prior_estimate outside [0, 1]";
  double min_converted = INFINITY;
  double max_unconverted = -INFINITY;
  for (const auto& e : table.entries) {
    if (!(e.w >= 0.0) || !std::isfinite(e.w)) return "weight of '" + e.id + "' is negative or not finite";
    const double expected = instance_weight(e.p_s, table.c_estimate);
    if (e.w != expected) return "weight of '" + e.id + "' does not match its labelling probability";
    if (e.converted && e.labelled) return "labelled instance '" + e.id + "' marked converted";
    if (e.labelled) continue;
    if (e.converted) min_converted = std::min(min_converted, e.w);
    else max_unconverted = std::max(max_unconverted, e.w);
  }
  if (max_unconverted > min_converted) return "converted set is not a prefix of the weight ranking";
  return std::nullopt;
}

enum class Mode { pn, pu, puc };

inline std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::pn: return "pn";
    case Mode::pu: return "pu";
    case Mode::puc: return "puc";
  }
  return "?";
}

inline Mode parse_mode(const std::string& text) {
  if (text == "pn") return Mode::pn;
  if (text == "pu") return Mode::pu;
  if (text == "puc") return Mode::puc;
  fail(Errc::usage, "unknown mode '" + text + "' (expected pn, pu or puc)");
}

struct PipelineConfig {
  Mode mode = Mode::puc;
  TrainConfig train;
  std::uint64_t validation_buckets = 5;  // one bucket of the id hash is held out
};

struct PipelineResult {
  LinearProbModel model;                         // g, predicts p(y=1|x)
  std::optional<LinearProbModel> labelling_model;  // f, predicts p(s=1|x)
  std::optional<PUWeightTable> weights;
  std::size_t validation_size = 0;
};

/// Deterministic hold-out membership by id hash (about 1 in `buckets`).
inline bool in_validation(const std::string& id, std::uint64_t buckets) { return fnv1a(id) % buckets == 0; }

struct WeightFit {
  LinearProbModel labelling_model;  // f
  PUWeightTable table;
  std::size_t validation_size = 0;
};

/// Trains f on the instances outside the hash hold-out, estimates c on the
/// labelled instances inside it and weighs every instance. With `convert`
/// the prior is estimated and PUC conversion applied.
inline WeightFit fit_weight_table(const FeatureDataset& train, const PipelineConfig& config, bool convert) {
  require(!train.empty(), Errc::dimension, "empty training set");
  const Matrix x = train.feature_matrix();
  TrainConfig tc = config.train;
  tc.num_classes = 2;

  std::vector<std::size_t> fit_rows, val_rows;
  std::vector<int> fit_labels;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const bool s = is_labelled(train[i]);
    if (in_validation(train[i].id, config.validation_buckets)) {
      if (s) val_rows.push_back(i);
    } else {
      fit_rows.push_back(i);
      fit_labels.push_back(s ? kPositive : kNegative);
    }
  }
  require(!val_rows.empty(), Errc::empty_validation, "the hash split left no labelled instance for validation");

  WeightFit out;
  out.validation_size = val_rows.size();
  out.labelling_model = train_linear_prob(x.select_rows(fit_rows), fit_labels, tc);
  const double c = estimate_c(out.labelling_model, x.select_rows(val_rows));
  out.table = compute_weight_table(train, out.labelling_model, c);
  if (convert) {
    out.table.prior_estimate = estimate_prior(out.table);
    out.table = puc_convert(std::move(out.table));
  }
  return out;
}

/// Trains g in one of three modes:
///   pn  - unlabelled instances are treated as negatives;
///   pu  - weights from fit_weight_table, g trained on the weight-duplicated
///         data;
///   puc - as pu, plus prior estimation and conversion before training g.
inline PipelineResult fit_pu_pipeline(const FeatureDataset& train, const PipelineConfig& config) {
  require(!train.empty(), Errc::dimension, "empty training set");
  TrainConfig tc = config.train;
  tc.num_classes = 2;
  PipelineResult out;

  if (config.mode == Mode::pn) {
    std::vector<int> s(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) s[i] = is_labelled(train[i]) ? kPositive : kNegative;
    out.model = train_linear_prob(train.feature_matrix(), s, tc);
    return out;
  }

  WeightFit fit = fit_weight_table(train, config, config.mode == Mode::puc);
  const auto weighted = build_weighted_training_set(train, fit.table);
  out.model = train_linear_prob(weighted.features, weighted.labels, weighted.weights, tc);
  out.labelling_model = std::move(fit.labelling_model);
  out.weights = std::move(fit.table);
  out.validation_size = fit.validation_size;
  return out;
}

/// Share of true positives (by `truth`) predicted positive by `model`.
inline double recall(const LinearProbModel& model, const Matrix& x, const std::vector<int>& truth) {
  std::size_t positives = 0, hits = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (truth[i] != kPositive) continue;
    ++positives;
    hits += predict_class(model, x.row(i)) == kPositive;
  }
  return positives == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(positives);
}

}  // namespace vek::pu
