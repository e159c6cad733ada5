#pragma once

// Diagnostic properties of saliency explanations: agreement with human
// rationales (MAP), confidence indication, faithfulness (AUC-TP), and
// rationale / dataset consistency.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vek/dataio.hpp"
#include "vek/error.hpp"
#include "vek/numerics/matrix.hpp"
#include "vek/numerics/stats.hpp"
#include "vek/random.hpp"
#include "vek/xdiag/adapter.hpp"

namespace vek::xdiag {

// ---------------------------------------------------------------- agreement

struct MapResult {
  double map = 0.0;
  std::size_t instances = 0;
  std::size_t skipped_no_positives = 0;
};

/// Mean average precision of the gold-class saliency against each rationale.
/// Rationales without a positive token are skipped and counted.
inline MapResult human_agreement_map(const SaliencyTensor& saliency, const RationaleSet& gold,
                                     const std::map<std::string, int>& gold_labels) {
  MapResult out;
  double sum = 0.0;
  for (const auto& [id, mask] : gold) {
    auto label = gold_labels.find(id);
    if (label == gold_labels.end()) fail(Errc::unknown_instance, "no gold label for '" + id + "'");
    const auto* scores = saliency.find(id, label->second);
    if (!scores)
      fail(Errc::missing_saliency, "no saliency for '" + id + "' at class " + std::to_string(label->second));
    if (scores->size() != mask.size())
      fail(Errc::length_mismatch, "saliency for '" + id + "' has " + std::to_string(scores->size()) +
                                      " scores, rationale has " + std::to_string(mask.size()));
    if (std::find(mask.begin(), mask.end(), 1) == mask.end()) {
      ++out.skipped_no_positives;
      continue;
    }
    sum += average_precision(mask, *scores);
    ++out.instances;
  }
  require(out.instances > 0, Errc::no_positives, "no rationale has a positive token");
  out.map = sum / static_cast<double>(out.instances);
  return out;
}

// ------------------------------------------------------ confidence indication

/// Saliency distance of the predicted class to the others. Binary: the summed
/// token difference; more classes: (max, min, mean) of the summed
/// differences to each other class.
inline std::vector<double> saliency_distance_features(const std::vector<const std::vector<double>*>& per_class,
                                                      std::size_t predicted) {
  const std::size_t k = per_class.size();
  require(k >= 2, Errc::dimension, "saliency distance needs at least 2 classes");
  require(predicted < k, Errc::missing_class, "predicted class " + std::to_string(predicted) + " out of range");
  for (std::size_t c = 0; c < k; ++c)
    if (!per_class[c]) fail(Errc::missing_class, "no saliency for class " + std::to_string(c));
  const auto& own = *per_class[predicted];
  std::vector<double> diffs;
  for (std::size_t c = 0; c < k; ++c) {
    if (c == predicted) continue;
    const auto& other = *per_class[c];
    require(other.size() == own.size(), Errc::length_mismatch, "saliency lengths differ across classes");
    double d = 0.0;
    for (std::size_t j = 0; j < own.size(); ++j) d += own[j] - other[j];
    diffs.push_back(d);
  }
  if (k == 2) return diffs;
  const double mx = *std::max_element(diffs.begin(), diffs.end());
  const double mn = *std::min_element(diffs.begin(), diffs.end());
  return {mx, mn, mean(diffs)};
}

inline std::vector<double> saliency_distance_features(const SaliencyTensor& saliency, const std::string& id,
                                                      std::size_t predicted, std::size_t num_classes) {
  std::vector<const std::vector<double>*> per_class;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto* s = saliency.find(id, static_cast<int>(c));
    if (!s) fail(Errc::missing_class, "no saliency for '" + id + "' at class " + std::to_string(c));
    per_class.push_back(s);
  }
  return saliency_distance_features(per_class, predicted);
}

/// Sigmoid-output linear regressor on standardized features, fitted by
/// squared-error gradient descent.
struct SigmoidRegressor {
  std::vector<double> mean, scale, w;
  double b = 0.0;

  double predict(std::span<const double> x) const {
    double u = b;
    for (std::size_t j = 0; j < w.size(); ++j) u += w[j] * (x[j] - mean[j]) / scale[j];
    return 1.0 / (1.0 + std::exp(-u));
  }
};

struct RegressorConfig {
  int epochs = 5000;
  double learning_rate = 1.0;
  double tolerance = 1e-14;
};

inline SigmoidRegressor fit_sigmoid_regressor(const Matrix& x, std::span<const double> y,
                                              const std::vector<std::size_t>& rows, const RegressorConfig& config = {}) {
  require(!rows.empty(), Errc::too_few_instances, "regressor needs training rows");
  const std::size_t p = x.cols();
  const double n = static_cast<double>(rows.size());
  SigmoidRegressor r;
  r.mean.assign(p, 0.0);
  r.scale.assign(p, 0.0);
  r.w.assign(p, 0.0);
  for (std::size_t i : rows)
    for (std::size_t j = 0; j < p; ++j) r.mean[j] += x(i, j) / n;
  for (std::size_t i : rows)
    for (std::size_t j = 0; j < p; ++j) r.scale[j] += (x(i, j) - r.mean[j]) * (x(i, j) - r.mean[j]) / n;
  for (double& s : r.scale) s = s > 1e-24 ? std::sqrt(s) : 1.0;

  double ybar = 0.0;
  for (std::size_t i : rows) ybar += y[i] / n;
  ybar = std::clamp(ybar, 1e-6, 1.0 - 1e-6);
  r.b = std::log(ybar / (1.0 - ybar));

  auto loss_grad = [&](const SigmoidRegressor& m, std::vector<double>* gw, double* gb) {
    double loss = 0.0;
    if (gw) gw->assign(p, 0.0);
    if (gb) *gb = 0.0;
    for (std::size_t i : rows) {
      const double pred = m.predict(x.row(i));
      const double e = pred - y[i];
      loss += e * e / n;
      if (!gw) continue;
      const double g = 2.0 * e * pred * (1.0 - pred) / n;
      for (std::size_t j = 0; j < p; ++j) (*gw)[j] += g * (x(i, j) - m.mean[j]) / m.scale[j];
      *gb += g;
    }
    return loss;
  };

  double lr = config.learning_rate;
  std::vector<double> gw;
  double gb = 0.0;
  double loss = loss_grad(r, &gw, &gb);
  for (int epoch = 0; epoch < config.epochs && lr > 1e-12; ++epoch) {
    SigmoidRegressor next = r;
    for (std::size_t j = 0; j < p; ++j) next.w[j] -= lr * gw[j];
    next.b -= lr * gb;
    const double next_loss = loss_grad(next, nullptr, nullptr);
    if (!(next_loss <= loss)) {
      lr *= 0.5;
      continue;
    }
    const double delta = loss - next_loss;
    r = std::move(next);
    loss = loss_grad(r, &gw, &gb);
    lr *= 1.1;
    if (delta < config.tolerance) break;
  }
  return r;
}

inline std::size_t confidence_decile(double y) {
  return std::min<std::size_t>(9, static_cast<std::size_t>(std::max(0.0, std::floor(y * 10.0))));
}

/// Resamples `rows` with replacement so every non-empty confidence decile
/// reaches the size of the largest one.
inline std::vector<std::size_t> upsample_deciles(const std::vector<std::size_t>& rows, std::span<const double> y,
                                                 Rng& rng) {
  std::vector<std::vector<std::size_t>> bins(10);
  for (std::size_t i : rows) bins[confidence_decile(y[i])].push_back(i);
  std::size_t target = 0;
  for (const auto& b : bins) target = std::max(target, b.size());
  std::vector<std::size_t> out = rows;
  for (const auto& b : bins) {
    if (b.empty()) continue;
    for (std::size_t extra = b.size(); extra < target; ++extra) out.push_back(b[rng.below(b.size())]);
  }
  return out;
}

struct ConfidenceConfig {
  std::size_t folds = 5;
  bool upsample = false;
  std::uint64_t seed = 13;
  RegressorConfig regressor;
};

struct ConfidenceResult {
  double mae = 0.0;        // mean of fold MAEs
  double max_error = 0.0;  // largest absolute error on any held-out instance
  std::vector<double> fold_mae;
  std::size_t instances = 0;
};

/// Cross-validated regression from saliency-distance features to model
/// confidence.
inline ConfidenceResult confidence_indication(const Matrix& features, std::span<const double> confidences,
                                              const ConfidenceConfig& config) {
  const std::size_t n = features.rows();
  require(confidences.size() == n, Errc::dimension, "confidence count does not match feature rows");
  require(n >= 10, Errc::too_few_instances, "confidence indication needs at least 10 instances, got " + std::to_string(n));
  require(config.folds >= 2 && config.folds <= n, Errc::invalid_argument,
          "fold count must lie in [2, " + std::to_string(n) + "]");
  for (double c : confidences)
    require(c >= 0.0 && c <= 1.0, Errc::schema, "confidence outside [0, 1]");

  Rng rng(config.seed);
  const auto order = rng.permutation(n);
  ConfidenceResult out;
  out.instances = n;
  for (std::size_t f = 0; f < config.folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t pos = 0; pos < n; ++pos) (pos % config.folds == f ? test : train).push_back(order[pos]);
    if (config.upsample) train = upsample_deciles(train, confidences, rng);
    const auto model = fit_sigmoid_regressor(features, confidences, train, config.regressor);
    double sum = 0.0;
    for (std::size_t i : test) {
      const double e = std::abs(model.predict(features.row(i)) - confidences[i]);
      sum += e;
      out.max_error = std::max(out.max_error, e);
    }
    out.fold_mae.push_back(sum / static_cast<double>(test.size()));
  }
  out.mae = mean(out.fold_mae);
  return out;
}

inline ConfidenceResult confidence_indication(const SaliencyTensor& saliency, const ConfidenceTable& confidences,
                                              std::size_t num_classes, const ConfidenceConfig& config) {
  Matrix features;
  std::vector<double> targets;
  for (const auto& [id, entry] : confidences) {
    const auto f = saliency_distance_features(saliency, id, static_cast<std::size_t>(entry.predicted_class), num_classes);
    features.append_row(f);
    targets.push_back(entry.confidence);
  }
  return confidence_indication(features, targets, config);
}

// ------------------------------------------------------------- faithfulness

enum class Metric { macro_f1, accuracy };

inline Metric parse_metric(const std::string& s) {
  if (s == "macro_f1") return Metric::macro_f1;
  if (s == "accuracy") return Metric::accuracy;
  fail(Errc::usage, "unknown metric '" + s + "' (expected macro_f1 or accuracy)");
}

inline std::string to_string(Metric m) { return m == Metric::macro_f1 ? "macro_f1" : "accuracy"; }

inline double accuracy(std::span<const int> gold, std::span<const int> predicted) {
  require(gold.size() == predicted.size() && !gold.empty(), Errc::dimension, "accuracy needs aligned, non-empty labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += gold[i] == predicted[i];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

/// Macro-F1 over the labels present in gold or predictions.
inline double macro_f1(std::span<const int> gold, std::span<const int> predicted) {
  require(gold.size() == predicted.size() && !gold.empty(), Errc::dimension, "macro-F1 needs aligned, non-empty labels");
  std::set<int> labels(gold.begin(), gold.end());
  labels.insert(predicted.begin(), predicted.end());
  double sum = 0.0;
  for (int l : labels) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (predicted[i] == l && gold[i] == l) ++tp;
      else if (predicted[i] == l) ++fp;
      else if (gold[i] == l) ++fn;
    }
    sum += tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
  }
  return sum / static_cast<double>(labels.size());
}

inline double performance(Metric metric, std::span<const int> gold, std::span<const int> predicted) {
  return metric == Metric::macro_f1 ? macro_f1(gold, predicted) : accuracy(gold, predicted);
}

inline std::vector<int> default_thresholds() { return {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100}; }

/// Parses "0,10,20"; "a,b,...,z" expands the arithmetic progression.
inline std::vector<int> parse_thresholds(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    parts.push_back(item);
  }
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) fail(Errc::usage, "--thresholds: '" + s + "' is not an integer");
    if (v < 0 || v > 100) fail(Errc::usage, "--thresholds: " + s + " outside [0, 100]");
    return v;
  };
  std::vector<int> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] != "...") {
      out.push_back(to_int(parts[i]));
      continue;
    }
    if (i < 2 || i + 1 >= parts.size()) fail(Errc::usage, "--thresholds: '...' needs two values before and one after");
    const int step = out[out.size() - 1] - out[out.size() - 2];
    const int last = to_int(parts[i + 1]);
    if (step <= 0) fail(Errc::usage, "--thresholds: '...' needs an increasing progression");
    for (int v = out.back() + step; v < last; v += step) out.push_back(v);
  }
  if (out.empty()) fail(Errc::usage, "--thresholds: empty list");
  return out;
}

/// Indices of the `count` highest scores; ties go to the lower index.
inline std::vector<std::size_t> top_salient(std::span<const double> scores, std::size_t count) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(count, idx.size()));
  return idx;
}

/// Trapezoidal area over points sorted by x.
inline double trapezoid(std::vector<std::pair<double, double>> points) {
  std::sort(points.begin(), points.end());
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i)
    area += (points[i].first - points[i - 1].first) * (points[i].second + points[i - 1].second) / 2.0;
  return area;
}

struct AuctpResult {
  double auc = 0.0;
  std::vector<std::pair<double, double>> points;  // (threshold / 100, P0 - Pi)
  std::vector<double> performance;                 // per threshold
};

/// Masks the top i% salient tokens of every instance for each threshold i and
/// integrates the performance drop.
inline AuctpResult faithfulness_auctp(const ModelAdapter& adapter, const std::vector<TokenInstance>& instances,
                                      const std::vector<std::vector<double>>& saliency, Metric metric,
                                      const std::vector<int>& thresholds) {
  require(!instances.empty(), Errc::too_few_instances, "faithfulness needs instances");
  require(saliency.size() == instances.size(), Errc::dimension, "saliency count does not match instances");
  std::vector<int> gold;
  for (const auto& x : instances) {
    if (!x.label) fail(Errc::schema, "instance '" + x.id + "' has no gold label");
    gold.push_back(*x.label);
  }
  auto evaluate = [&](int threshold) {
    std::vector<int> predicted;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& x = instances[i];
      require(saliency[i].size() == x.size(), Errc::length_mismatch, "saliency length differs for '" + x.id + "'");
      const std::size_t count = static_cast<std::size_t>(threshold) * x.size() / 100;
      const auto masked = count == 0 ? x : adapter.mask_tokens(x, top_salient(saliency[i], count));
      predicted.push_back(adapter.predict(masked));
    }
    return performance(metric, gold, predicted);
  };
  AuctpResult out;
  const double p0 = evaluate(0);
  for (int t : thresholds) {
    const double pt = t == 0 ? p0 : evaluate(t);
    out.performance.push_back(pt);
    out.points.emplace_back(t / 100.0, p0 - pt);
  }
  out.auc = trapezoid(out.points);
  return out;
}

/// Saliency rows for each instance at the predicted class (or the gold class).
inline std::vector<std::vector<double>> saliency_rows(const ModelAdapter& adapter, const std::vector<TokenInstance>& instances,
                                                      const SaliencyTensor& saliency, bool gold_class) {
  std::vector<std::vector<double>> out;
  for (const auto& x : instances) {
    int cls = 0;
    if (gold_class) {
      if (!x.label) fail(Errc::schema, "instance '" + x.id + "' has no gold label");
      cls = *x.label;
    } else {
      cls = adapter.predict(x);
    }
    const auto* s = saliency.find(x.id, cls);
    if (!s) fail(Errc::missing_saliency, "no saliency for '" + x.id + "' at class " + std::to_string(cls));
    out.push_back(*s);
  }
  return out;
}

// -------------------------------------------------------------- consistency

/// Euclidean norm of the absolute difference; the shorter vector is padded
/// with zeros.
inline double vector_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::max(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs((i < a.size() ? a[i] : 0.0) - (i < b.size() ? b[i] : 0.0));
    s += d * d;
  }
  return std::sqrt(s);
}

/// Spearman correlation of the min-max scaled distance sequences.
inline double consistency_rho(std::span<const double> activation_distances, std::span<const double> saliency_distances) {
  const auto a = minmax_scale(activation_distances);
  const auto s = minmax_scale(saliency_distances);
  return spearman_rho(a, s);
}

struct PairRho {
  std::size_t first = 0, second = 0;
  std::optional<double> rho;  // empty when the pair alone is degenerate
};

struct ConsistencyResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t points = 0;
  std::vector<PairRho> pairs;
};

using VectorsById = std::map<std::string, std::vector<double>>;

inline const std::vector<double>& lookup(const VectorsById& m, const std::string& id, const char* what, Errc code) {
  auto it = m.find(id);
  if (it == m.end()) fail(code, std::string("no ") + what + " for '" + id + "'");
  return it->second;
}

/// Consistency across models: for every unordered model pair and instance,
/// the distance between activation summaries against the distance between
/// saliency vectors.
inline ConsistencyResult rationale_consistency(const std::vector<VectorsById>& activations,
                                               const std::vector<VectorsById>& saliency,
                                               const std::vector<std::string>& ids) {
  require(activations.size() >= 2, Errc::invalid_argument, "rationale consistency needs at least 2 models");
  require(saliency.size() == activations.size(), Errc::dimension, "saliency sets do not match models");
  ConsistencyResult out;
  std::vector<double> d_act, d_sal;
  for (std::size_t a = 0; a < activations.size(); ++a)
    for (std::size_t b = a + 1; b < activations.size(); ++b) {
      std::vector<double> pa, ps;
      for (const auto& id : ids) {
        pa.push_back(vector_distance(lookup(activations[a], id, "activations", Errc::unknown_instance),
                                     lookup(activations[b], id, "activations", Errc::unknown_instance)));
        ps.push_back(vector_distance(lookup(saliency[a], id, "saliency", Errc::missing_saliency),
                                     lookup(saliency[b], id, "saliency", Errc::missing_saliency)));
      }
      PairRho pr{a, b, std::nullopt};
      try {
        pr.rho = consistency_rho(pa, ps);
      } catch (const Error& e) {
        if (e.code() != Errc::zero_variance && e.code() != Errc::dimension) throw;
      }
      out.pairs.push_back(pr);
      d_act.insert(d_act.end(), pa.begin(), pa.end());
      d_sal.insert(d_sal.end(), ps.begin(), ps.end());
    }
  out.rho = consistency_rho(d_act, d_sal);
  out.points = d_act.size();
  out.p_value = correlation_p_value(out.rho, out.points);
  return out;
}

/// Adapter form: activations from each adapter, saliency at the gold class.
inline ConsistencyResult rationale_consistency(const std::vector<const ModelAdapter*>& adapters,
                                               const std::vector<TokenInstance>& instances,
                                               const std::vector<SaliencyTensor>& saliency) {
  require(saliency.size() == adapters.size(), Errc::dimension, "one saliency tensor per adapter is required");
  std::vector<VectorsById> acts(adapters.size()), sals(adapters.size());
  std::vector<std::string> ids;
  for (const auto& x : instances) {
    if (!x.label) fail(Errc::schema, "instance '" + x.id + "' has no gold label");
    ids.push_back(x.id);
    for (std::size_t m = 0; m < adapters.size(); ++m) {
      acts[m][x.id] = adapters[m]->activation_summary(x);
      const auto* s = saliency[m].find(x.id, *x.label);
      if (!s) fail(Errc::missing_saliency, "no saliency for '" + x.id + "' at class " + std::to_string(*x.label));
      sals[m][x.id] = *s;
    }
  }
  return rationale_consistency(acts, sals, ids);
}

struct PairSelection {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t overlap_pairs = 0;
  std::size_t random_pairs = 0;
};

/// Instance pairs ranked by the number of shared unique tokens (ties by id
/// pair); the top `n_overlap` are kept and `n_random` more drawn uniformly
/// without replacement from the rest.
inline PairSelection select_pairs(const std::vector<TokenInstance>& instances, std::size_t n_overlap,
                                  std::size_t n_random, std::uint64_t seed) {
  const std::size_t n = instances.size();
  std::vector<std::set<std::string>> vocab(n);
  for (std::size_t i = 0; i < n; ++i) vocab[i] = {instances[i].tokens.begin(), instances[i].tokens.end()};

  struct Candidate {
    std::size_t overlap;
    const std::string* lo;
    const std::string* hi;
    std::size_t a, b;
  };
  std::vector<Candidate> all;
  all.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      std::size_t shared = 0;
      for (const auto& t : vocab[i]) shared += vocab[j].count(t);
      const std::string* a = &instances[i].id;
      const std::string* b = &instances[j].id;
      if (*b < *a) std::swap(a, b);
      all.push_back({shared, a, b, i, j});
    }
  std::sort(all.begin(), all.end(), [](const Candidate& x, const Candidate& y) {
    if (x.overlap != y.overlap) return x.overlap > y.overlap;
    if (*x.lo != *y.lo) return *x.lo < *y.lo;
    return *x.hi < *y.hi;
  });

  PairSelection out;
  const std::size_t top = std::min(n_overlap, all.size());
  for (std::size_t i = 0; i < top; ++i) out.pairs.emplace_back(all[i].a, all[i].b);
  out.overlap_pairs = top;

  const std::size_t rest = all.size() - top;
  const std::size_t draw = std::min(n_random, rest);
  std::vector<std::size_t> pool(rest);
  for (std::size_t i = 0; i < rest; ++i) pool[i] = top + i;
  Rng rng(seed);
  for (std::size_t i = 0; i < draw; ++i) {
    const std::size_t j = i + rng.below(rest - i);
    std::swap(pool[i], pool[j]);
    out.pairs.emplace_back(all[pool[i]].a, all[pool[i]].b);
  }
  out.random_pairs = draw;
  return out;
}

struct DatasetConsistencyResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t pairs = 0;
  std::size_t overlap_pairs = 0;
  std::size_t random_pairs = 0;
};

/// Consistency across instances of one model.
inline DatasetConsistencyResult dataset_consistency(const VectorsById& activations, const VectorsById& saliency,
                                                    const std::vector<TokenInstance>& instances, std::size_t n_overlap,
                                                    std::size_t n_random, std::uint64_t seed) {
  require(instances.size() >= 2, Errc::too_few_instances, "dataset consistency needs at least 2 instances");
  const auto sel = select_pairs(instances, n_overlap, n_random, seed);
  std::vector<double> d_act, d_sal;
  for (const auto& [a, b] : sel.pairs) {
    const auto& ia = instances[a].id;
    const auto& ib = instances[b].id;
    d_act.push_back(vector_distance(lookup(activations, ia, "activations", Errc::unknown_instance),
                                    lookup(activations, ib, "activations", Errc::unknown_instance)));
    d_sal.push_back(vector_distance(lookup(saliency, ia, "saliency", Errc::missing_saliency),
                                    lookup(saliency, ib, "saliency", Errc::missing_saliency)));
  }
  DatasetConsistencyResult out;
  out.rho = consistency_rho(d_act, d_sal);
  out.pairs = sel.pairs.size();
  out.overlap_pairs = sel.overlap_pairs;
  out.random_pairs = sel.random_pairs;
  out.p_value = correlation_p_value(out.rho, out.pairs);
  return out;
}

/// Adapter form; saliency is taken at the gold class when present, else at
/// the predicted class.
inline DatasetConsistencyResult dataset_consistency(const ModelAdapter& adapter, const std::vector<TokenInstance>& instances,
                                                    const SaliencyTensor& saliency, std::size_t n_overlap,
                                                    std::size_t n_random, std::uint64_t seed) {
  VectorsById acts, sals;
  for (const auto& x : instances) {
    acts[x.id] = adapter.activation_summary(x);
    const int cls = x.label ? *x.label : adapter.predict(x);
    const auto* s = saliency.find(x.id, cls);
    if (!s) fail(Errc::missing_saliency, "no saliency for '" + x.id + "' at class " + std::to_string(cls));
    sals[x.id] = *s;
  }
  return dataset_consistency(acts, sals, instances, n_overlap, n_random, seed);
}

}  // namespace vek::xdiag
