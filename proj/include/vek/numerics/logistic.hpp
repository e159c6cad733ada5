#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vek/error.hpp"
#include "vek/numerics/matrix.hpp"
#include "vek/random.hpp"

namespace vek {

/// Multinomial logistic model: softmax(weights * x + bias).
struct LinearProbModel {
  Matrix weights;  // num_classes x num_features
  std::vector<double> bias;

  std::size_t num_classes() const noexcept { return weights.rows(); }
  std::size_t num_features() const noexcept { return weights.cols(); }
};

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 2000;
  double l2 = 1e-4;
  std::uint64_t seed = 13;
  double tolerance = 1e-8;
  double init_scale = 0.01;
  std::size_t num_classes = 0;  // 0: one more than the largest label
};

inline constexpr double kProbClip = 1e-12;

inline std::vector<double> softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - top);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace detail {

// Softmax of the logits into `p` without allocating; same arithmetic as
// softmax(logits(model, x)).
inline void proba_into(const LinearProbModel& model, std::span<const double> x, std::vector<double>& p) {
  const std::size_t classes = model.num_classes();
  p.assign(model.bias.begin(), model.bias.end());
  for (std::size_t k = 0; k < classes; ++k) {
    auto w = model.weights.row(k);
    for (std::size_t j = 0; j < x.size(); ++j) p[k] += w[j] * x[j];
  }
  const double top = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    p[k] = std::exp(p[k] - top);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
}

}  // namespace detail

inline std::vector<double> logits(const LinearProbModel& model, std::span<const double> x) {
  if (x.size() != model.num_features())
    fail(Errc::dimension,
         "input has " + std::to_string(x.size()) + " features, model expects " + std::to_string(model.num_features()));
  std::vector<double> z(model.bias);
  for (std::size_t k = 0; k < model.num_classes(); ++k) {
    auto w = model.weights.row(k);
    for (std::size_t j = 0; j < x.size(); ++j) z[k] += w[j] * x[j];
  }
  return z;
}

inline std::vector<double> predict_proba(const LinearProbModel& model, std::span<const double> x) {
  return softmax(logits(model, x));
}

/// Index of the largest entry; lowest index wins ties.
inline std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

inline int predict_class(const LinearProbModel& model, std::span<const double> x) {
  return static_cast<int>(argmax(predict_proba(model, x)));
}

/// Small Gaussian weights drawn from `seed`; also used as the untrained
/// ("random-init") variant of a reference model.
inline LinearProbModel random_linear_prob(std::size_t num_classes, std::size_t num_features, double scale,
                                          std::uint64_t seed) {
  Rng rng(seed);
  LinearProbModel model{Matrix(num_classes, num_features), std::vector<double>(num_classes, 0.0)};
  for (std::size_t k = 0; k < num_classes; ++k)
    for (std::size_t j = 0; j < num_features; ++j) model.weights(k, j) = scale * rng.normal();
  return model;
}

struct LossGradient {
  double loss = 0.0;
  Matrix grad_weights;
  std::vector<double> grad_bias;
};

/// Weighted mean cross-entropy plus 0.5 * l2 * ||W||^2, and its gradient.
/// Probabilities are clipped to [1e-12, 1 - 1e-12] inside the log only.
inline LossGradient loss_and_gradient(const LinearProbModel& model, const Matrix& data, std::span<const int> labels,
                                      std::span<const double> weights, double l2) {
  const std::size_t classes = model.num_classes();
  LossGradient out{0.0, Matrix(classes, model.num_features()), std::vector<double>(classes, 0.0)};
  double total_weight = 0.0;
  for (double w : weights) total_weight += w;
  require(total_weight > 0.0, Errc::invalid_argument, "sample weights sum to zero");

  require(data.cols() == model.num_features(), Errc::dimension,
          "data has " + std::to_string(data.cols()) + " features, model expects " + std::to_string(model.num_features()));
  std::vector<double> p;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    auto x = data.row(i);
    detail::proba_into(model, x, p);
    const auto y = static_cast<std::size_t>(labels[i]);
    out.loss -= w * std::log(std::clamp(p[y], kProbClip, 1.0 - kProbClip));
    for (std::size_t k = 0; k < classes; ++k) {
      const double residual = w * (p[k] - (k == y ? 1.0 : 0.0));
      out.grad_bias[k] += residual;
      auto g = out.grad_weights.row(k);
      for (std::size_t j = 0; j < x.size(); ++j) g[j] += residual * x[j];
    }
  }
  out.loss /= total_weight;
  for (double& g : out.grad_bias) g /= total_weight;
  double penalty = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    auto g = out.grad_weights.row(k);
    auto w = model.weights.row(k);
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] = g[j] / total_weight + l2 * w[j];
      penalty += w[j] * w[j];
    }
  }
  out.loss += 0.5 * l2 * penalty;
  return out;
}

/// Full-batch gradient descent on the weighted cross-entropy. A step that
/// increases the loss is rejected and the learning rate halved; training
/// stops when |delta loss| < tolerance or after `epochs` accepted steps.
/// `loss_trace`, when given, receives the loss after initialization and
/// after every accepted step.
inline LinearProbModel train_linear_prob(const Matrix& data, std::span<const int> labels,
                                         std::span<const double> sample_weights, const TrainConfig& config,
                                         std::vector<double>* loss_trace = nullptr) {
  require(labels.size() == data.rows() && sample_weights.size() == data.rows(), Errc::dimension,
          "labels/weights must match data rows");
  require(data.rows() > 0, Errc::dimension, "no training rows");
  int max_label = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0, Errc::invalid_argument, "negative class label at row " + std::to_string(i));
    require(sample_weights[i] >= 0.0 && std::isfinite(sample_weights[i]), Errc::invalid_argument,
            "invalid sample weight at row " + std::to_string(i));
    max_label = std::max(max_label, labels[i]);
  }
  const std::size_t classes =
      config.num_classes > 0 ? config.num_classes : static_cast<std::size_t>(max_label) + 1;
  require(static_cast<std::size_t>(max_label) < classes, Errc::invalid_argument, "label exceeds class count");
  {
    std::vector<bool> seen(classes, false);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (sample_weights[i] <= 0.0) continue;
      if (!seen[static_cast<std::size_t>(labels[i])]) ++distinct;
      seen[static_cast<std::size_t>(labels[i])] = true;
    }
    require(distinct >= 2, Errc::single_class, "training data contains fewer than two classes");
  }

  LinearProbModel model = random_linear_prob(classes, data.cols(), config.init_scale, config.seed);
  double lr = config.learning_rate;
  LossGradient current = loss_and_gradient(model, data, labels, sample_weights, config.l2);
  require(std::isfinite(current.loss), Errc::non_finite_loss, "loss is not finite at epoch 0");
  if (loss_trace) loss_trace->assign(1, current.loss);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    LinearProbModel next = model;
    LossGradient trial;
    for (;;) {
      next = model;
      for (std::size_t k = 0; k < classes; ++k) {
        next.bias[k] -= lr * current.grad_bias[k];
        auto w = next.weights.row(k);
        auto g = current.grad_weights.row(k);
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
      }
      trial = loss_and_gradient(next, data, labels, sample_weights, config.l2);
      if (!std::isfinite(trial.loss))
        fail(Errc::non_finite_loss, "loss diverged at epoch " + std::to_string(epoch));
      if (trial.loss <= current.loss || lr < 1e-12) break;
      lr *= 0.5;
    }
    if (trial.loss > current.loss) break;  // no descent possible at this precision
    const double delta = current.loss - trial.loss;
    model = std::move(next);
    current = std::move(trial);
    if (loss_trace) loss_trace->push_back(current.loss);
    if (delta < config.tolerance) break;
  }
  return model;
}

inline LinearProbModel train_linear_prob(const Matrix& data, std::span<const int> labels, const TrainConfig& config) {
  std::vector<double> ones(labels.size(), 1.0);
  return train_linear_prob(data, labels, ones, config);
}

}  // namespace vek
