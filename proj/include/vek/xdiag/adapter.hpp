#pragma once

// Model adapters for the diagnostics: anything that maps a token sequence to
// a class distribution and an activation summary. The built-in adapter is a
// bag-of-tokens LinearProbModel.

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vek/dataio.hpp"
#include "vek/error.hpp"
#include "vek/numerics/logistic.hpp"

namespace vek::xdiag {

/// Tokens with a per-token presence (1 = present, 0 = masked).
struct TokenInstance {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<double> presence;
  std::optional<int> label;

  std::size_t size() const noexcept { return tokens.size(); }
};

inline TokenInstance to_token_instance(const Instance& inst) {
  require(inst.tokens.has_value(), Errc::schema, "instance '" + inst.id + "' has no tokens");
  return {inst.id, *inst.tokens, std::vector<double>(inst.tokens->size(), 1.0), inst.label};
}

inline std::vector<TokenInstance> to_token_instances(const FeatureDataset& ds) {
  std::vector<TokenInstance> out;
  out.reserve(ds.size());
  for (const auto& inst : ds.instances()) out.push_back(to_token_instance(inst));
  return out;
}

enum class GradientTarget { logit, probability };

class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::vector<double> predict_distribution(const TokenInstance& x) const = 0;
  virtual std::vector<double> activation_summary(const TokenInstance& x) const = 0;

  virtual TokenInstance mask_tokens(const TokenInstance&, std::span<const std::size_t>) const {
    fail(Errc::mask_unsupported, "adapter does not support token masking");
  }
  /// d score(cls) / d presence_j for every token j.
  virtual std::vector<double> token_gradients(const TokenInstance&, std::size_t, GradientTarget) const {
    fail(Errc::gradient_unsupported, "adapter does not expose gradients");
  }

  int predict(const TokenInstance& x) const {
    const auto p = predict_distribution(x);
    return static_cast<int>(argmax(p));
  }
};

/// Linear softmax model over summed token presences.
class BagOfTokensModel final : public ModelAdapter {
 public:
  BagOfTokensModel(std::vector<std::string> vocabulary, LinearProbModel model)
      : vocabulary_(std::move(vocabulary)), model_(std::move(model)) {
    require(model_.num_features() == vocabulary_.size(), Errc::dimension,
            "model has " + std::to_string(model_.num_features()) + " features for a vocabulary of " +
                std::to_string(vocabulary_.size()));
    require(model_.num_classes() >= 2, Errc::dimension, "model needs at least 2 classes");
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
      const bool fresh = index_.emplace(vocabulary_[i], i).second;
      require(fresh, Errc::duplicate_id, "duplicate vocabulary entry '" + vocabulary_[i] + "'");
    }
  }

  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const LinearProbModel& model() const noexcept { return model_; }

  std::optional<std::size_t> vocab_index(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<double> featurize(const TokenInstance& x) const {
    require(x.presence.size() == x.tokens.size(), Errc::length_mismatch, "presence length differs from tokens for '" + x.id + "'");
    std::vector<double> f(vocabulary_.size(), 0.0);
    for (std::size_t j = 0; j < x.tokens.size(); ++j)
      if (auto v = vocab_index(x.tokens[j])) f[*v] += x.presence[j];
    return f;
  }

  std::size_t num_classes() const override { return model_.num_classes(); }

  std::vector<double> predict_distribution(const TokenInstance& x) const override {
    return predict_proba(model_, featurize(x));
  }

  std::vector<double> activation_summary(const TokenInstance& x) const override { return logits(model_, featurize(x)); }

  TokenInstance mask_tokens(const TokenInstance& x, std::span<const std::size_t> indices) const override {
    TokenInstance out = x;
    for (std::size_t j : indices) {
      require(j < out.presence.size(), Errc::invalid_argument, "token index out of range for '" + x.id + "'");
      out.presence[j] = 0.0;
    }
    return out;
  }

  std::vector<double> token_gradients(const TokenInstance& x, std::size_t cls, GradientTarget target) const override {
    require(cls < num_classes(), Errc::missing_class, "class " + std::to_string(cls) + " out of range");
    std::vector<double> p;
    if (target == GradientTarget::probability) p = predict_distribution(x);
    std::vector<double> out(x.size(), 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto v = vocab_index(x.tokens[j]);
      if (!v) continue;
      if (target == GradientTarget::logit) {
        out[j] = model_.weights(cls, *v);
        continue;
      }
      double expected = 0.0;
      for (std::size_t k = 0; k < num_classes(); ++k) expected += p[k] * model_.weights(k, *v);
      out[j] = p[cls] * (model_.weights(cls, *v) - expected);
    }
    return out;
  }

 private:
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::size_t> index_;
  LinearProbModel model_;
};

inline Json to_json(const BagOfTokensModel& m) {
  Json weights = Json::array();
  for (std::size_t k = 0; k < m.model().num_classes(); ++k) {
    const auto row = m.model().weights.row(k);
    weights.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return Json{{"vocabulary", m.vocabulary()}, {"weights", weights}, {"bias", m.model().bias}};
}

inline BagOfTokensModel parse_bag_of_tokens(const Json& j, const std::string& source) {
  try {
    for (const auto& [key, value] : j.items())
      if (key != "vocabulary" && key != "weights" && key != "bias")
        fail(Errc::schema, source + ": unknown model field '" + key + "'");
    auto vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    auto bias = j.at("bias").get<std::vector<double>>();
    require(bias.size() == rows.size(), Errc::schema, source + ": bias length differs from weight rows");
    return BagOfTokensModel(std::move(vocabulary), LinearProbModel{Matrix::from_rows(rows), std::move(bias)});
  } catch (const Json::exception& e) {
    fail(Errc::schema, source + ": malformed model: " + e.what());
  }
}

inline BagOfTokensModel load_bag_of_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open model '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    fail(Errc::parse, path + ": " + e.what());
  }
  return parse_bag_of_tokens(j, path);
}

inline void write_bag_of_tokens(const BagOfTokensModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::io, "cannot write model '" + path + "'");
  out << to_json(m).dump() << '\n';
}

}  // namespace vek::xdiag
