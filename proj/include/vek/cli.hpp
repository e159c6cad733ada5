#pragma once

// Command-line front end: parses arguments, runs one subcommand and writes
// its JSON report.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vek/dataio.hpp"
#include "vek/error.hpp"
#include "vek/explain.hpp"
#include "vek/pu.hpp"
#include "vek/ssa.hpp"
#include "vek/synth.hpp"
#include "vek/xdiag.hpp"

namespace vek::cli {

inline constexpr std::uint64_t kDefaultSeed = 13;
inline constexpr const char* kSeedEnv = "VEK_SEED";

/// --seed wins, then VEK_SEED, then the default.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const char* env) {
  if (flag) return *flag;
  if (!env || !*env) return kDefaultSeed;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc{} || ptr != end) fail(Errc::usage, std::string(kSeedEnv) + ": not an unsigned integer: '" + env + "'");
  return v;
}

struct Options {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool timing = false;

  // pu
  std::string input, test, table;
  std::string mode = "puc";
  int epochs = 2000;
  double lr = 0.5;
  double l2 = 1e-4;
  std::uint64_t buckets = 5;

  // ssa
  std::string target;
  std::size_t d = 0;
  std::size_t k = 5;
  bool use_clusters = false;

  // diag
  std::vector<std::string> saliency, models;
  std::string rationales, confidences, activations;
  std::string technique = "occlusion";
  std::string aggregation = "mean";
  std::size_t shapley_samples = 200;
  std::string metric = "macro_f1";
  std::string thresholds = "0,10,20,30,40,50,60,70,80,90,100";
  bool gold_class = false;
  std::size_t folds = 5;
  bool upsample = false;
  std::size_t n_overlap = 2000;
  std::size_t n_random = 2000;

  // explain
  std::size_t sentences_k = 4;
  bool force_k = false;
  std::string predictions;
  std::optional<std::size_t> lead;
  std::string candidate, reference;

  // synth
  std::size_t n = 5000;
  double prior = 0.5;
  double labelling_frequency = 0.5;
  double separation = 4.0;
  double sigma = 1.0;
  std::size_t steps = 2;
  std::size_t per_class = 100;
  double drift_sigma = 0.6;
  double angle = 30.0;
  std::size_t seeds_per_class = 10;
  std::size_t token_n = 500;
  std::size_t vocabulary = 50;
  std::size_t min_length = 8;
  std::size_t max_length = 20;
  std::size_t classes = 2;
  std::string model_out, rationales_out, confidences_out;
};

struct Run {
  std::ostream& out;
  const Options& opt;
  std::uint64_t seed = kDefaultSeed;
  Json config;
  std::chrono::steady_clock::time_point start;

  void emit(Json results, const std::string& path) const {
    double wall = 0.0;
    if (opt.timing) wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const Json report = make_report(config, seed, std::move(results), wall);
    if (path.empty()) {
      out << render_report(report);
    } else {
      write_report(report, path);
    }
  }
  void emit(Json results) const { emit(std::move(results), opt.out); }
};

// ------------------------------------------------------------------ helpers

inline Json to_json(const LinearProbModel& m) {
  Json weights = Json::array();
  for (std::size_t k = 0; k < m.num_classes(); ++k) {
    const auto row = m.weights.row(k);
    weights.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return Json{{"weights", weights}, {"bias", m.bias}};
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::size_t count_hidden(const FeatureDataset& ds) {
  return static_cast<std::size_t>(std::count_if(ds.instances().begin(), ds.instances().end(), [](const Instance& i) {
    return i.pu_flag == PuFlag::unlabelled && i.label.has_value();
  }));
}

inline Json predictions_json(const FeatureDataset& ds, const std::vector<int>& predicted) {
  Json out = Json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(Json{{"id", ds[i].id}, {"label", predicted[i]}});
  return out;
}

// ----------------------------------------------------------------------- pu

inline pu::PipelineConfig pu_config(const Run& r) {
  pu::PipelineConfig c;
  c.mode = pu::parse_mode(r.opt.mode);
  c.train.epochs = r.opt.epochs;
  c.train.learning_rate = r.opt.lr;
  c.train.l2 = r.opt.l2;
  c.train.seed = r.seed;
  c.validation_buckets = r.opt.buckets;
  return c;
}

inline void write_weight_table(const pu::PUWeightTable& table, const std::string& path) {
  std::vector<Json> lines;
  for (const auto& e : table.entries)
    lines.push_back(Json{{"id", e.id}, {"labelled", e.labelled}, {"p_s", e.p_s}, {"w", e.w}, {"converted", e.converted}});
  detail::write_lines(path, lines);
}

inline Json weight_summary(const pu::PUWeightTable& table, const FeatureDataset& ds) {
  std::size_t labelled = 0, unlabelled = 0, unlabelled_pos = 0, converted_pos = 0, converted_known = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& e = table.entries[i];
    const auto& truth = ds[i].label;
    if (e.labelled) {
      ++labelled;
      continue;
    }
    ++unlabelled;
    if (truth && *truth == pu::kPositive) ++unlabelled_pos;
    if (e.converted && truth) {
      ++converted_known;
      if (*truth == pu::kPositive) ++converted_pos;
    }
  }
  Json out{{"c_estimate", table.c_estimate},
           {"prior_estimate", optional_json(table.prior_estimate)},
           {"labelled", labelled},
           {"unlabelled", unlabelled},
           {"conversions", table.conversions()}};
  const auto violation = pu::check_invariants(table);
  out["invariant_violation"] = violation ? Json(*violation) : Json(nullptr);
  if (unlabelled > 0) out["unlabelled_positive_rate"] = static_cast<double>(unlabelled_pos) / static_cast<double>(unlabelled);
  if (converted_known > 0)
    out["converted_purity"] = static_cast<double>(converted_pos) / static_cast<double>(converted_known);
  return out;
}

inline void pu_fit(const Run& r) {
  const auto ds = load_dataset(r.opt.input, Schema::features, 2);
  const auto config = pu_config(r);
  const auto fit = pu::fit_pu_pipeline(ds, config);
  Json results{{"mode", pu::to_string(config.mode)}, {"model", to_json(fit.model)}, {"validation_size", fit.validation_size}};
  if (fit.labelling_model) results["labelling_model"] = to_json(*fit.labelling_model);
  if (fit.weights) {
    results["weights"] = weight_summary(*fit.weights, ds);
    if (!r.opt.table.empty()) write_weight_table(*fit.weights, r.opt.table);
  }
  if (!r.opt.test.empty()) {
    const auto test = load_dataset(r.opt.test, Schema::features, 2);
    const Matrix x = test.feature_matrix();
    std::vector<int> truth;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      require(test[i].label.has_value(), Errc::schema, r.opt.test + ": instance '" + test[i].id + "' has no label");
      truth.push_back(*test[i].label);
      correct += predict_class(fit.model, x.row(i)) == truth.back();
    }
    results["test"] = Json{{"instances", test.size()},
                           {"recall", pu::recall(fit.model, x, truth)},
                           {"accuracy", static_cast<double>(correct) / static_cast<double>(test.size())}};
  }
  r.emit(std::move(results));
}

inline void pu_convert(const Run& r) {
  const auto ds = load_dataset(r.opt.input, Schema::features, 2);
  const auto fit = pu::fit_weight_table(ds, pu_config(r), true);
  if (!r.opt.table.empty()) write_weight_table(fit.table, r.opt.table);
  Json results = weight_summary(fit.table, ds);
  results["validation_size"] = fit.validation_size;
  r.emit(std::move(results));
}

// ---------------------------------------------------------------------- ssa

inline Json cells_json(const ssa::AlignmentMap& map) {
  Json cells = Json::array();
  if (!map.per_class) return cells;
  for (const auto& [key, cell] : *map.per_class) {
    Json c{{"label", key.label},
           {"source_count", cell.source_count},
           {"target_count", cell.target_count},
           {"dim", cell.M.cols()}};
    c["cluster"] = key.cluster == ssa::kNoCluster ? Json(nullptr) : Json(key.cluster);
    cells.push_back(std::move(c));
  }
  return cells;
}

inline void ssa_align(const Run& r) {
  const auto ds = load_dataset(r.opt.input, Schema::features);
  FeatureDataset source, target;
  if (r.opt.target.empty()) {
    auto steps = ds.split_by_timestep();
    require(steps.size() >= 2, Errc::schema, r.opt.input + ": need at least two timesteps when --target is absent");
    target = std::move(steps.back());
    source = std::move(steps[steps.size() - 2]);
  } else {
    source = ds;
    target = load_dataset(r.opt.target, Schema::features);
  }
  const ssa::SemiConfig config{r.opt.d, r.opt.use_clusters, r.opt.k, r.seed};
  const auto t = ssa::transfer(source, target, config);
  Json results{{"dim", t.map.dim()}, {"cells", cells_json(t.map)}, {"predictions", predictions_json(target, t.predicted)}};
  if (count_hidden(target) > 0) {
    results["accuracy"] = ssa::hidden_label_accuracy(target, t.predicted);
    results["unaligned_accuracy"] = ssa::hidden_label_accuracy(target, ssa::unaligned_predictions(source, target));
  }
  r.emit(std::move(results));
}

inline void ssa_sequence(const Run& r) {
  const auto ds = load_dataset(r.opt.input, Schema::features);
  const auto steps = ds.split_by_timestep();
  require(steps.size() >= 2, Errc::schema, r.opt.input + ": need at least two timesteps");
  const ssa::SequenceConfig config{r.opt.d, r.opt.use_clusters, r.opt.k, r.seed};
  const auto seq = ssa::align_sequence(steps, config);

  Json levels = Json::array();
  for (const auto& level : seq.levels) {
    Json l = Json::array();
    for (const auto& [first, last] : level) l.push_back(Json::array({first, last}));
    levels.push_back(std::move(l));
  }
  const auto& last = steps.back();
  const auto predicted = seq.step_labels(steps.size() - 1);
  Json results{{"steps", steps.size()}, {"dim", seq.coords.cols()}, {"levels", levels},
               {"predictions", predictions_json(last, predicted)}};
  if (count_hidden(last) > 0) {
    const auto& prev = steps[steps.size() - 2];
    const ssa::SemiConfig pair{r.opt.d, r.opt.use_clusters, r.opt.k, r.seed};
    results["accuracy"] = ssa::hidden_label_accuracy(last, predicted);
    results["previous_step_accuracy"] = ssa::hidden_label_accuracy(last, ssa::transfer(prev, last, pair).predicted);
    results["unaligned_accuracy"] = ssa::hidden_label_accuracy(last, ssa::unaligned_predictions(prev, last));
  }
  r.emit(std::move(results));
}

// --------------------------------------------------------------------- diag

inline xdiag::SaliencyOptions saliency_options(const Run& r) {
  xdiag::SaliencyOptions o;
  o.technique = xdiag::parse_technique(r.opt.technique);
  o.aggregation = r.opt.aggregation == "l2" ? xdiag::Aggregation::l2 : xdiag::Aggregation::mean;
  o.shapley_samples = r.opt.shapley_samples;
  o.seed = r.seed;
  return o;
}

inline std::vector<xdiag::BagOfTokensModel> load_models(const Run& r) {
  std::vector<xdiag::BagOfTokensModel> out;
  for (const auto& p : r.opt.models) out.push_back(xdiag::load_bag_of_tokens(p));
  return out;
}

/// Saliency from the i-th --saliency file, or computed from the i-th model.
inline SaliencyTensor obtain_saliency(const Run& r, const FeatureDataset& ds,
                                      const std::vector<xdiag::TokenInstance>& instances,
                                      const std::vector<xdiag::BagOfTokensModel>& models, std::size_t i) {
  if (i < r.opt.saliency.size()) return load_saliency(r.opt.saliency[i], ds);
  if (i < models.size()) return xdiag::saliency_tensor(models[i], instances, saliency_options(r));
  fail(Errc::usage, "--saliency or --model is required");
}

inline std::map<std::string, int> gold_labels(const FeatureDataset& ds, const std::string& source) {
  std::map<std::string, int> out;
  for (const auto& inst : ds.instances()) {
    require(inst.label.has_value(), Errc::schema, source + ": instance '" + inst.id + "' has no label");
    out[inst.id] = *inst.label;
  }
  return out;
}

inline void diag_map(const Run& r) {
  const auto ds = load_dataset(r.opt.input, Schema::tokens);
  const auto instances = xdiag::to_token_instances(ds);
  const auto models = load_models(r);
  const auto sal = obtain_saliency(r, ds, instances, models, 0);
  const auto gold = load_rationales(r.opt.rationales, ds);
  const auto res = xdiag::human_agreement_map(sal, gold, gold_labels(ds, r.opt.input));
  r.emit(Json{{"map", res.map}, {"instances", res.instances}, {"skipped_no_positives", res.skipped_no_positives}});
}

inline void diag_confidence(const Run& r) {
  const auto ds = load_dataset(r.opt.input, Schema::tokens);
  const auto instances = xdiag::to_token_instances(ds);
  const auto models = load_models(r);
  const auto sal = obtain_saliency(r, ds, instances, models, 0);

  ConfidenceTable conf;
  if (!r.opt.confidences.empty()) {
    conf = load_confidences(r.opt.confidences, ds);
  } else {
    require(!models.empty(), Errc::usage, "--confidences or --model is required");
    for (const auto& x : instances) {
      const auto p = models[0].predict_distribution(x);
      const auto k = argmax(p);
      conf[x.id] = ConfidenceEntry{static_cast<int>(k), p[k], p};
    }
  }
  std::size_t classes = 0;
  if (!models.empty()) {
    classes = models[0].num_classes();
  } else {
    for (const auto& [key, v] : sal.entries) classes = std::max(classes, static_cast<std::size_t>(key.second) + 1);
  }
  xdiag::ConfidenceConfig cc;
  cc.folds = r.opt.folds;
  cc.upsample = r.opt.upsample;
  cc.seed = r.seed;
  const auto res = xdiag::confidence_indication(sal, conf, classes, cc);
  r.emit(Json{{"mae", res.mae}, {"max_error", res.max_error}, {"fold_mae", res.fold_mae}, {"instances", res.instances}});
}

inline void diag_faithfulness(const Run& r) {
  const auto thresholds = xdiag::parse_thresholds(r.opt.thresholds);
  const auto ds = load_dataset(r.opt.input, Schema::tokens);
  const auto instances = xdiag::to_token_instances(ds);
  const auto models = load_models(r);
  require(models.size() == 1, Errc::usage, "--model: exactly one model is required");
  const auto sal = obtain_saliency(r, ds, instances, models, 0);
  const auto rows = xdiag::saliency_rows(models[0], instances, sal, r.opt.gold_class);
  const auto res = xdiag::faithfulness_auctp(models[0], instances, rows, xdiag::parse_metric(r.opt.metric),
                                             thresholds);
  Json points = Json::array();
  for (const auto& [t, drop] : res.points) points.push_back(Json::array({t, drop}));
  r.emit(Json{{"auc_tp", res.auc}, {"points", points}, {"performance", res.performance}});
}

inline void diag_rationale(const Run& r) {
  const auto ds = load_dataset(r.opt.input, Schema::tokens);
  const auto instances = xdiag::to_token_instances(ds);
  std::vector<std::string> ids;
  for (const auto& x : instances) ids.push_back(x.id);

  std::vector<xdiag::VectorsById> acts, sals;
  std::vector<std::string> names;
  if (!r.opt.activations.empty()) {
    // Activation models in name order pair with --saliency files in order.
    const auto table = load_activations(r.opt.activations, ds);
    for (const auto& [key, v] : table) {
      if (names.empty() || names.back() != key.first) {
        names.push_back(key.first);
        acts.emplace_back();
      }
      acts.back()[key.second] = v;
    }
    require(r.opt.saliency.size() == names.size(), Errc::usage,
            "--saliency: " + std::to_string(names.size()) + " files required, one per activation model");
  } else {
    require(r.opt.models.size() >= 2, Errc::usage, "--model: at least two models are required");
    names = r.opt.models;
  }
  const auto models = load_models(r);
  if (!models.empty() && !r.opt.saliency.empty())
    require(r.opt.saliency.size() == models.size(), Errc::usage, "--saliency: one file per --model is required");
  for (std::size_t m = 0; m < names.size(); ++m) {
    const auto tensor = obtain_saliency(r, ds, instances, models, m);
    xdiag::VectorsById s, a;
    for (const auto& x : instances) {
      require(x.label.has_value(), Errc::schema, r.opt.input + ": instance '" + x.id + "' has no label");
      const auto* v = tensor.find(x.id, *x.label);
      if (!v) fail(Errc::missing_saliency, "no saliency for '" + x.id + "' at class " + std::to_string(*x.label));
      s[x.id] = *v;
      if (r.opt.activations.empty()) a[x.id] = models[m].activation_summary(x);
    }
    sals.push_back(std::move(s));
    if (r.opt.activations.empty()) acts.push_back(std::move(a));
  }
  const auto res = xdiag::rationale_consistency(acts, sals, ids);
  Json pairs = Json::array();
  for (const auto& p : res.pairs)
    pairs.push_back(Json{{"first", names[p.first]}, {"second", names[p.second]}, {"rho", optional_json(p.rho)}});
  r.emit(Json{{"rho", res.rho}, {"p_value", res.p_value}, {"points", res.points}, {"pairs", pairs}});
}

inline void diag_dataset(const Run& r) {
  const auto ds = load_dataset(r.opt.input, Schema::tokens);
  const auto instances = xdiag::to_token_instances(ds);
  const auto models = load_models(r);
  xdiag::DatasetConsistencyResult res;
  if (!r.opt.activations.empty()) {
    const auto table = load_activations(r.opt.activations, ds);
    require(!table.empty(), Errc::schema, r.opt.activations + ": no activations");
    const std::string model = table.begin()->first.first;
    xdiag::VectorsById acts, sals;
    const auto tensor = obtain_saliency(r, ds, instances, models, 0);
    for (const auto& [key, v] : table) {
      require(key.first == model, Errc::schema, r.opt.activations + ": expected a single model, found '" + model +
                                                    "' and '" + key.first + "'");
      acts[key.second] = v;
    }
    for (const auto& x : instances) {
      require(x.label.has_value(), Errc::schema, r.opt.input + ": instance '" + x.id + "' has no label");
      const auto* v = tensor.find(x.id, *x.label);
      if (!v) fail(Errc::missing_saliency, "no saliency for '" + x.id + "' at class " + std::to_string(*x.label));
      sals[x.id] = *v;
    }
    res = xdiag::dataset_consistency(acts, sals, instances, r.opt.n_overlap, r.opt.n_random, r.seed);
  } else {
    require(models.size() == 1, Errc::usage, "--model: exactly one model is required without --activations");
    const auto tensor = obtain_saliency(r, ds, instances, models, 0);
    res = xdiag::dataset_consistency(models[0], instances, tensor, r.opt.n_overlap, r.opt.n_random, r.seed);
  }
  r.emit(Json{{"rho", res.rho},
              {"p_value", res.p_value},
              {"pairs", res.pairs},
              {"overlap_pairs", res.overlap_pairs},
              {"random_pairs", res.random_pairs}});
}

// ------------------------------------------------------------------ explain

inline void explain_oracle(const Run& r) {
  const auto docs = load_explain_corpus(r.opt.input);
  std::map<std::string, std::string> predicted, gold;
  Json selections = Json::array();
  std::vector<Json> lines;
  for (const auto& d : docs) {
    const auto sel = explain::greedy_oracle(d.sentences, d.justification, r.opt.sentences_k, r.opt.force_k);
    Json trace = Json::array();
    std::vector<double> gains;
    for (const auto& [pick, f1] : sel.trace) {
      trace.push_back(Json{{"sentence", pick}, {"rouge2_f1", f1}});
      gains.push_back(f1);
    }
    selections.push_back(Json{{"id", d.id}, {"selected", sel.selected}, {"trace", trace}});
    lines.push_back(Json{{"id", d.id}, {"selected", sel.selected}, {"gains", gains}});
    predicted[d.id] = explain::selection_text(d.sentences, sel.selected);
    gold[d.id] = d.justification;
  }
  if (!r.opt.predictions.empty()) detail::write_lines(r.opt.predictions, lines);
  const auto eval = explain::evaluate_explanations(predicted, gold);
  r.emit(Json{{"instances", eval.instances}, {"mean", explain::to_json(eval.mean)}, {"selections", selections}});
}

inline void explain_rouge(const Run& r) {
  r.emit(explain::to_json(explain::score_text(r.opt.candidate, r.opt.reference)));
}

inline void explain_eval(const Run& r) {
  const auto docs = load_explain_corpus(r.opt.input);
  std::vector<ExplainPrediction> preds;
  if (r.opt.lead) {
    require(r.opt.predictions.empty(), Errc::usage, "--lead and --predictions are mutually exclusive");
    for (const auto& d : docs) preds.push_back({d.id, explain::lead_k(d.sentences, *r.opt.lead).selected, std::nullopt});
  } else {
    require(!r.opt.predictions.empty(), Errc::usage, "--predictions or --lead is required");
    preds = load_explain_predictions(r.opt.predictions);
  }
  std::map<std::string, std::string> gold;
  for (const auto& d : docs) gold[d.id] = d.justification;
  const auto eval = explain::evaluate_explanations(explain::prediction_texts(docs, preds), gold);
  r.emit(Json{{"instances", eval.instances}, {"mean", explain::to_json(eval.mean)}});
}

// -------------------------------------------------------------------- synth

inline Json dataset_summary(const FeatureDataset& ds) {
  std::size_t labelled = 0, unlabelled = 0;
  for (const auto& i : ds.instances()) (i.pu_flag == PuFlag::unlabelled ? unlabelled : labelled)++;
  return Json{{"instances", ds.size()}, {"labelled", labelled}, {"unlabelled", unlabelled}};
}

inline void synth_scar(const Run& r) {
  synth::ScarConfig c;
  c.n = r.opt.n;
  c.prior = r.opt.prior;
  c.labelling_frequency = r.opt.labelling_frequency;
  c.separation = r.opt.separation;
  c.sigma = r.opt.sigma;
  const auto ds = synth::scar(c, r.seed);
  write_dataset(ds, r.opt.out);
  r.emit(dataset_summary(ds), "");
}

inline void synth_drift(const Run& r) {
  synth::DriftConfig c;
  c.steps = r.opt.steps;
  c.per_class = r.opt.per_class;
  c.angle_degrees = r.opt.angle;
  c.seeds_per_class = r.opt.seeds_per_class;
  c.sigma = r.opt.drift_sigma;
  const auto ds = synth::drift(c, r.seed);
  write_dataset(ds, r.opt.out);
  r.emit(dataset_summary(ds), "");
}

inline void synth_tokens(const Run& r) {
  synth::TokensConfig c;
  c.n = r.opt.token_n;
  c.vocabulary = r.opt.vocabulary;
  c.min_length = r.opt.min_length;
  c.max_length = r.opt.max_length;
  c.num_classes = r.opt.classes;
  const auto corpus = synth::tokens(c, r.seed);
  write_dataset(corpus.dataset, r.opt.out);
  if (!r.opt.model_out.empty()) xdiag::write_bag_of_tokens(corpus.model, r.opt.model_out);
  if (!r.opt.rationales_out.empty()) write_rationales(corpus.rationales, r.opt.rationales_out);
  if (!r.opt.confidences_out.empty()) {
    ConfidenceTable table;
    for (const auto& inst : corpus.dataset.instances()) {
      const auto p = corpus.model.predict_distribution(xdiag::to_token_instance(inst));
      const auto k = argmax(p);
      table[inst.id] = ConfidenceEntry{static_cast<int>(k), p[k], p};
    }
    write_confidences(table, r.opt.confidences_out);
  }
  r.emit(dataset_summary(corpus.dataset), "");
}

// ----------------------------------------------------------------- dispatch

namespace detail {

struct Leaf {
  CLI::App* app;
  std::string name;
  std::function<void(const Run&)> run;
  std::function<Json()> config;
};

}  // namespace detail

/// Runs one command line (without the program name). Returns 0 on success,
/// 2 on usage errors and 1 on data or validation errors.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"vek: PU learning, subspace alignment, saliency diagnostics and extractive explanations", "vek"};
  app.require_subcommand(1);
  std::vector<detail::Leaf> leaves;

  auto leaf = [&](CLI::App* group, const std::string& name, const std::string& help, bool report_out = true) {
    CLI::App* sub = group->add_subcommand(name, help);
    sub->add_option("--seed", o.seed, "random seed (default: $VEK_SEED, else 13)");
    if (report_out) sub->add_option("--out", o.out, "report path (default: stdout)");
    sub->add_flag("--timing", o.timing, "record wall time in the report");
    return sub;
  };
  auto add = [&](CLI::App* sub, std::string name, std::function<void(const Run&)> run, std::function<Json()> config) {
    leaves.push_back({sub, std::move(name), std::move(run), std::move(config)});
  };

  // pu
  CLI::App* pu_group = app.add_subcommand("pu", "positive-unlabelled learning");
  pu_group->require_subcommand(1);
  auto pu_train_options = [&](CLI::App* s) {
    s->add_option("--input", o.input, "feature dataset (JSONL)")->required();
    s->add_option("--epochs", o.epochs, "gradient steps")->capture_default_str();
    s->add_option("--lr", o.lr, "learning rate")->capture_default_str();
    s->add_option("--l2", o.l2, "L2 penalty")->capture_default_str();
    s->add_option("--buckets", o.buckets, "id-hash buckets; one is held out to estimate c")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    s->add_option("--table", o.table, "write the weight table here (JSONL)");
  };
  auto pu_echo = [&] {
    return Json{{"input", o.input}, {"epochs", o.epochs}, {"lr", o.lr}, {"l2", o.l2},
                {"buckets", o.buckets}, {"table", o.table}};
  };
  {
    auto* s = leaf(pu_group, "fit", "train a classifier in pn, pu or puc mode");
    pu_train_options(s);
    s->add_option("--mode", o.mode, "pn, pu or puc")->capture_default_str()->check(CLI::IsMember({"pn", "pu", "puc"}));
    s->add_option("--test", o.test, "labelled dataset for recall and accuracy");
    add(s, "pu fit", pu_fit, [&] {
      Json c = pu_echo();
      c["mode"] = o.mode;
      c["test"] = o.test;
      return c;
    });
    s = leaf(pu_group, "convert", "estimate weights and the prior, then relabel the top unlabelled instances");
    pu_train_options(s);
    add(s, "pu convert", pu_convert, pu_echo);
  }

  // ssa
  CLI::App* ssa_group = app.add_subcommand("ssa", "subspace alignment");
  ssa_group->require_subcommand(1);
  auto ssa_options = [&](CLI::App* s) {
    s->add_option("--d", o.d, "subspace dimension (0: min(10, rank))")->capture_default_str();
    s->add_option("--k", o.k, "k-means clusters")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_flag("--use-clusters", o.use_clusters, "align per (class, cluster) cell");
  };
  auto ssa_echo = [&] {
    return Json{{"input", o.input}, {"d", o.d}, {"k", o.k}, {"use_clusters", o.use_clusters}};
  };
  {
    auto* s = leaf(ssa_group, "align", "semi-supervised alignment of a source onto a target");
    s->add_option("--input", o.input, "source dataset, or one with timesteps (last two are used)")->required();
    s->add_option("--target", o.target, "target dataset");
    ssa_options(s);
    add(s, "ssa align", ssa_align, [&] {
      Json c = ssa_echo();
      c["target"] = o.target;
      return c;
    });
    s = leaf(ssa_group, "sequence", "align every timestep into one space");
    s->add_option("--input", o.input, "dataset with timesteps")->required();
    ssa_options(s);
    add(s, "ssa sequence", ssa_sequence, ssa_echo);
  }

  // diag
  CLI::App* diag_group = app.add_subcommand("diag", "saliency diagnostics");
  diag_group->require_subcommand(1);
  auto diag_options = [&](CLI::App* s) {
    s->add_option("--input", o.input, "token dataset (JSONL)")->required();
    s->add_option("--saliency", o.saliency, "saliency tensor (JSONL); repeatable");
    s->add_option("--model", o.models, "bag-of-tokens model (JSON); repeatable");
    s->add_option("--technique", o.technique, "occlusion, gradient, inputx or shapley")
        ->capture_default_str()
        ->check(CLI::IsMember({"occlusion", "gradient", "inputx", "shapley"}));
    s->add_option("--aggregation", o.aggregation, "gradient aggregation: mean or l2")
        ->capture_default_str()
        ->check(CLI::IsMember({"mean", "l2"}));
    s->add_option("--samples", o.shapley_samples, "Shapley permutations")->capture_default_str()->check(CLI::PositiveNumber);
  };
  auto diag_echo = [&] {
    return Json{{"input", o.input},         {"saliency", o.saliency},
                {"model", o.models},        {"technique", o.technique},
                {"aggregation", o.aggregation}, {"samples", o.shapley_samples}};
  };
  {
    auto* s = leaf(diag_group, "map", "human agreement (MAP against rationales)");
    diag_options(s);
    s->add_option("--rationales", o.rationales, "gold rationales (JSONL)")->required();
    add(s, "diag map", diag_map, [&] {
      Json c = diag_echo();
      c["rationales"] = o.rationales;
      return c;
    });

    s = leaf(diag_group, "confidence", "confidence indication");
    diag_options(s);
    s->add_option("--confidences", o.confidences, "model confidences (JSONL)");
    s->add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
    s->add_flag("--upsample", o.upsample, "balance training folds over confidence deciles");
    add(s, "diag confidence", diag_confidence, [&] {
      Json c = diag_echo();
      c["confidences"] = o.confidences;
      c["folds"] = o.folds;
      c["upsample"] = o.upsample;
      return c;
    });

    s = leaf(diag_group, "faithfulness", "AUC of the performance drop as salient tokens are masked");
    diag_options(s);
    s->add_option("--metric", o.metric, "macro_f1 or accuracy")
        ->capture_default_str()
        ->check(CLI::IsMember({"macro_f1", "accuracy"}));
    s->add_option("--thresholds", o.thresholds, "masking percentages")->capture_default_str();
    s->add_flag("--gold-class", o.gold_class, "rank tokens by gold-class saliency instead of the predicted class");
    add(s, "diag faithfulness", diag_faithfulness, [&] {
      Json c = diag_echo();
      c["metric"] = o.metric;
      c["thresholds"] = o.thresholds;
      c["gold_class"] = o.gold_class;
      return c;
    });

    s = leaf(diag_group, "rationale", "consistency across models");
    diag_options(s);
    s->add_option("--activations", o.activations, "activation summaries (JSONL)");
    add(s, "diag rationale", diag_rationale, [&] {
      Json c = diag_echo();
      c["activations"] = o.activations;
      return c;
    });

    s = leaf(diag_group, "dataset", "consistency across instances");
    diag_options(s);
    s->add_option("--activations", o.activations, "activation summaries (JSONL)");
    s->add_option("--n-overlap", o.n_overlap, "pairs kept by token overlap")->capture_default_str();
    s->add_option("--n-random", o.n_random, "additional random pairs")->capture_default_str();
    add(s, "diag dataset", diag_dataset, [&] {
      Json c = diag_echo();
      c["activations"] = o.activations;
      c["n_overlap"] = o.n_overlap;
      c["n_random"] = o.n_random;
      return c;
    });
  }

  // explain
  CLI::App* explain_group = app.add_subcommand("explain", "extractive explanations and ROUGE");
  explain_group->require_subcommand(1);
  {
    auto* s = leaf(explain_group, "oracle", "greedy ROUGE-2 sentence oracle");
    s->add_option("--input", o.input, "corpus (JSONL: id, sentences, justification)")->required();
    s->add_option("--k", o.sentences_k, "sentences to select")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_flag("--force-k", o.force_k, "always select k sentences");
    s->add_option("--predictions", o.predictions, "write selections here (JSONL)");
    add(s, "explain oracle", explain_oracle, [&] {
      return Json{{"input", o.input}, {"k", o.sentences_k}, {"force_k", o.force_k}, {"predictions", o.predictions}};
    });

    s = leaf(explain_group, "rouge", "ROUGE-1, ROUGE-2 and ROUGE-L of two texts");
    s->add_option("--candidate", o.candidate, "candidate text")->required();
    s->add_option("--reference", o.reference, "reference text")->required();
    add(s, "explain rouge", explain_rouge,
        [&] { return Json{{"candidate", o.candidate}, {"reference", o.reference}}; });

    s = leaf(explain_group, "eval", "mean ROUGE of predictions against justifications");
    s->add_option("--input", o.input, "corpus (JSONL)")->required();
    s->add_option("--predictions", o.predictions, "predictions (JSONL: id, selected or text)");
    s->add_option("--lead", o.lead, "score the first K sentences instead")->check(CLI::PositiveNumber);
    add(s, "explain eval", explain_eval, [&] {
      return Json{{"input", o.input}, {"predictions", o.predictions}, {"lead", o.lead ? Json(*o.lead) : Json(nullptr)}};
    });
  }

  // synth
  CLI::App* synth_group = app.add_subcommand("synth", "synthetic data generators");
  synth_group->require_subcommand(1);
  {
    auto* s = leaf(synth_group, "scar", "two Gaussian classes, positives labelled completely at random", false);
    s->add_option("--out", o.out, "dataset path (JSONL)")->required();
    s->add_option("--n", o.n, "instances")->capture_default_str();
    s->add_option("--prior", o.prior, "p(y=1)")->capture_default_str();
    s->add_option("--c", o.labelling_frequency, "labelling frequency p(s=1|y=1)")->capture_default_str();
    s->add_option("--separation", o.separation, "class means at +-(s, s)")->capture_default_str();
    s->add_option("--sigma", o.sigma, "class standard deviation")->capture_default_str();
    add(s, "synth scar", synth_scar, [&] {
      return Json{{"out", o.out}, {"n", o.n}, {"prior", o.prior}, {"c", o.labelling_frequency},
                  {"separation", o.separation}, {"sigma", o.sigma}};
    });

    s = leaf(synth_group, "drift", "two classes rotating between timesteps", false);
    s->add_option("--out", o.out, "dataset path (JSONL)")->required();
    s->add_option("--steps", o.steps, "timesteps")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--per-class", o.per_class, "instances per class and step")->capture_default_str();
    s->add_option("--angle", o.angle, "rotation per step in degrees")->capture_default_str();
    s->add_option("--seeds-per-class", o.seeds_per_class, "labelled instances per class in the last step")
        ->capture_default_str();
    s->add_option("--sigma", o.drift_sigma, "class standard deviation")->capture_default_str();
    add(s, "synth drift", synth_drift, [&] {
      return Json{{"out", o.out}, {"steps", o.steps}, {"per_class", o.per_class}, {"angle", o.angle},
                  {"seeds_per_class", o.seeds_per_class}, {"sigma", o.drift_sigma}};
    });

    s = leaf(synth_group, "tokens", "token sequences labelled by a planted bag-of-tokens model", false);
    s->add_option("--out", o.out, "dataset path (JSONL)")->required();
    s->add_option("--n", o.token_n, "instances")->capture_default_str();
    s->add_option("--vocabulary", o.vocabulary, "vocabulary size")->capture_default_str();
    s->add_option("--min-length", o.min_length, "shortest sequence")->capture_default_str();
    s->add_option("--max-length", o.max_length, "longest sequence")->capture_default_str();
    s->add_option("--classes", o.classes, "number of classes")->capture_default_str();
    s->add_option("--model", o.model_out, "write the planted model here (JSON)");
    s->add_option("--rationales", o.rationales_out, "write rationales here (JSONL)");
    s->add_option("--confidences", o.confidences_out, "write model confidences here (JSONL)");
    add(s, "synth tokens", synth_tokens, [&] {
      return Json{{"out", o.out}, {"n", o.token_n}, {"vocabulary", o.vocabulary}, {"min_length", o.min_length},
                  {"max_length", o.max_length}, {"classes", o.classes}, {"model", o.model_out},
                  {"rationales", o.rationales_out}, {"confidences", o.confidences_out}};
    });
  }

  // Name an unknown subcommand before CLI11 reports a missing one.
  const CLI::App* level = &app;
  for (const auto& a : args) {
    if (a.empty() || a[0] == '-') break;
    const auto subs = level->get_subcommands([](const CLI::App*) { return true; });
    if (subs.empty()) break;
    const auto it = std::find_if(subs.begin(), subs.end(), [&](const CLI::App* s) { return s->get_name() == a; });
    if (it == subs.end()) {
      err << "unknown subcommand '" << a << "'\nRun with --help for more information.\n";
      return 2;
    }
    level = *it;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e, out, err);
      app.exit(e, out, err);
      return 2;
    }
    for (const auto& l : leaves) {
      if (!l.app->parsed()) continue;
      Run run{out, o, resolve_seed(o.seed, std::getenv(kSeedEnv)), l.config(), std::chrono::steady_clock::now()};
      run.config["command"] = l.name;
      l.run(run);
      return 0;
    }
    err << "error: no command given\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::usage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace vek::cli
