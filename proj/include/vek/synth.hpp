#pragma once

// Synthetic data generators with known generative truth.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "vek/dataio.hpp"
#include "vek/random.hpp"
#include "vek/xdiag/adapter.hpp"

namespace vek::synth {

inline std::string make_id(const char* prefix, std::size_t index, int width = 5) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, index);
  return buf;
}

struct ScarConfig {
  std::size_t n = 5000;
  double prior = 0.5;               // p(y=1)
  double labelling_frequency = 0.5;  // c = p(s=1|y=1)
  double separation = 4.0;           // class means at +-(separation, separation)
  double sigma = 1.0;
  std::string id_prefix = "s";
};

/// Two 2-D Gaussians; positives are labelled completely at random with
/// probability c. `label` holds the true class; `pu_flag` the labelling.
inline FeatureDataset scar(const ScarConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Instance> out;
  out.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const bool positive = rng.uniform() < config.prior;
    const double centre = positive ? config.separation : -config.separation;
    Instance inst;
    inst.id = make_id(config.id_prefix.c_str(), i);
    const double x0 = rng.normal(centre, config.sigma);
    const double x1 = rng.normal(centre, config.sigma);
    inst.features = std::vector<double>{x0, x1};
    inst.label = positive ? 1 : 0;
    const bool labelled = positive && rng.uniform() < config.labelling_frequency;
    inst.pu_flag = labelled ? PuFlag::labelled : PuFlag::unlabelled;
    out.push_back(std::move(inst));
  }
  return FeatureDataset(std::move(out));
}

struct DriftConfig {
  std::size_t steps = 2;
  std::size_t per_class = 100;
  double angle_degrees = 30.0;  // rotation about the origin between steps
  std::size_t seeds_per_class = 10;
  double sigma = 0.6;
  // class means before rotation
  std::vector<std::vector<double>> means{{5.0, -1.0}, {5.0, 1.0}};
  std::int64_t first_timestep = 0;
};

/// Two-class Gaussians whose means rotate by a fixed angle every step.
/// Every step but the last is fully labelled; the last step exposes
/// `seeds_per_class` labels per class and flags the rest unlabelled (their
/// `label` is held-out truth).
inline FeatureDataset drift(const DriftConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Instance> out;
  const std::size_t classes = config.means.size();
  for (std::size_t t = 0; t < config.steps; ++t) {
    const double angle = config.angle_degrees * static_cast<double>(t) * std::numbers::pi / 180.0;
    const double cs = std::cos(angle), sn = std::sin(angle);
    const bool last = t + 1 == config.steps;
    std::vector<std::size_t> seen(classes, 0);
    for (std::size_t i = 0; i < config.per_class * classes; ++i) {
      const std::size_t k = i % classes;
      const double x = rng.normal(config.means[k][0], config.sigma);
      const double y = rng.normal(config.means[k][1], config.sigma);
      Instance inst;
      inst.id = "t" + std::to_string(t) + "_" + make_id("", i);
      inst.features = std::vector<double>{cs * x - sn * y, sn * x + cs * y};
      inst.label = static_cast<int>(k);
      inst.timestep = config.first_timestep + static_cast<std::int64_t>(t);
      const bool visible = !last || seen[k] < config.seeds_per_class;
      ++seen[k];
      inst.pu_flag = visible ? PuFlag::labelled : PuFlag::unlabelled;
      out.push_back(std::move(inst));
    }
  }
  return FeatureDataset(std::move(out));
}

struct TokensConfig {
  std::size_t n = 500;
  std::size_t vocabulary = 50;
  std::size_t min_length = 8;
  std::size_t max_length = 20;
  std::size_t num_classes = 2;
  double weight_sigma = 1.0;
  double rationale_margin = 0.5;  // token weight lead over every other class
};

struct TokenCorpus {
  FeatureDataset dataset;
  xdiag::BagOfTokensModel model;
  RationaleSet rationales;
};

/// Token sequences drawn uniformly from a vocabulary, labelled by a planted
/// bag-of-tokens linear model. A token is in the rationale when its planted
/// weight for the label exceeds every other class weight by the margin.
inline TokenCorpus tokens(const TokensConfig& config, std::uint64_t seed) {
  require(config.vocabulary >= 1 && config.num_classes >= 2 && config.min_length >= 1 &&
              config.min_length <= config.max_length,
          Errc::invalid_argument, "invalid token corpus configuration");
  Rng rng(seed);
  std::vector<std::string> vocab;
  for (std::size_t v = 0; v < config.vocabulary; ++v) vocab.push_back(make_id("w", v, 2));
  Matrix w(config.num_classes, config.vocabulary);
  for (std::size_t k = 0; k < config.num_classes; ++k)
    for (std::size_t v = 0; v < config.vocabulary; ++v) w(k, v) = rng.normal(0.0, config.weight_sigma);
  xdiag::BagOfTokensModel model(vocab, LinearProbModel{w, std::vector<double>(config.num_classes, 0.0)});

  std::vector<Instance> out;
  RationaleSet rationales;
  for (std::size_t i = 0; i < config.n; ++i) {
    const std::size_t len = config.min_length + rng.below(config.max_length - config.min_length + 1);
    std::vector<std::string> toks;
    std::vector<std::size_t> ids;
    for (std::size_t j = 0; j < len; ++j) {
      ids.push_back(rng.below(config.vocabulary));
      toks.push_back(vocab[ids.back()]);
    }
    Instance inst;
    inst.id = make_id("d", i);
    inst.tokens = toks;
    const int label = model.predict(xdiag::to_token_instance(inst));
    inst.label = label;
    std::vector<int> mask;
    for (std::size_t v : ids) {
      double lead = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < config.num_classes; ++k)
        if (static_cast<int>(k) != label) lead = std::min(lead, w(static_cast<std::size_t>(label), v) - w(k, v));
      mask.push_back(lead >= config.rationale_margin ? 1 : 0);
    }
    rationales[inst.id] = std::move(mask);
    out.push_back(std::move(inst));
  }
  return {FeatureDataset(std::move(out)), std::move(model), std::move(rationales)};
}

/// Analytic token contribution to class `cls` under a bag-of-tokens model:
/// presence_j * (W[cls][v_j] - mean_k W[k][v_j]).
inline std::vector<double> planted_contributions(const xdiag::BagOfTokensModel& model, const xdiag::TokenInstance& x,
                                                 std::size_t cls) {
  const auto& w = model.model().weights;
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto v = model.vocab_index(x.tokens[j]);
    if (!v) continue;
    double avg = 0.0;
    for (std::size_t k = 0; k < w.rows(); ++k) avg += w(k, *v) / static_cast<double>(w.rows());
    out[j] = x.presence[j] * (w(cls, *v) - avg);
  }
  return out;
}

}  // namespace vek::synth
