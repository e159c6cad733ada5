#pragma once

// Saliency generators over a ModelAdapter: occlusion, gradient (optionally
// times input) and Shapley value sampling.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "vek/dataio.hpp"
#include "vek/error.hpp"
#include "vek/random.hpp"
#include "vek/xdiag/adapter.hpp"

namespace vek::xdiag {

enum class Aggregation { mean, l2 };

inline double class_probability(const ModelAdapter& adapter, const TokenInstance& x, std::size_t cls) {
  const auto p = adapter.predict_distribution(x);
  require(cls < p.size(), Errc::missing_class, "class " + std::to_string(cls) + " out of range");
  return p[cls];
}

/// score_j = p_cls(x) - p_cls(x with token j masked)
inline std::vector<double> saliency_occlusion(const ModelAdapter& adapter, const TokenInstance& x, std::size_t cls) {
  const double base = class_probability(adapter, x, cls);
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const std::size_t idx[] = {j};
    out[j] = base - class_probability(adapter, adapter.mask_tokens(x, idx), cls);
  }
  return out;
}

/// Per-token gradient of the class score, optionally multiplied by the token
/// input, aggregated over the token's feature block. The built-in adapter has
/// a one-dimensional block (the presence), so mean is the signed gradient
/// and l2 its magnitude.
inline std::vector<double> saliency_gradient(const ModelAdapter& adapter, const TokenInstance& x, std::size_t cls,
                                             Aggregation aggregation, bool input_x,
                                             GradientTarget target = GradientTarget::probability) {
  auto g = adapter.token_gradients(x, cls, target);
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (input_x) g[j] *= x.presence[j];
    if (aggregation == Aggregation::l2) g[j] = std::abs(g[j]);
  }
  return g;
}

/// Shapley value sampling: for every sampled permutation each token's
/// marginal contribution to p_cls when it joins the preceding coalition
/// (all other tokens masked); scores are the means over samples.
inline std::vector<double> saliency_shapley_sampling(const ModelAdapter& adapter, const TokenInstance& x,
                                                     std::size_t cls, std::size_t num_samples, std::uint64_t seed) {
  require(num_samples >= 1, Errc::invalid_argument, "Shapley sampling needs at least one sample");
  const std::size_t n = x.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const double p_empty = class_probability(adapter, adapter.mask_tokens(x, all), cls);

  Rng rng(seed);
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < num_samples; ++s) {
    const auto order = rng.permutation(n);
    std::vector<bool> joined(n, false);
    double prev = p_empty;
    for (std::size_t j : order) {
      joined[j] = true;
      std::vector<std::size_t> masked;
      for (std::size_t i = 0; i < n; ++i)
        if (!joined[i]) masked.push_back(i);
      const double p = class_probability(adapter, adapter.mask_tokens(x, masked), cls);
      out[j] += p - prev;
      prev = p;
    }
  }
  for (double& v : out) v /= static_cast<double>(num_samples);
  return out;
}

enum class Technique { occlusion, gradient, input_x_gradient, shapley };

inline Technique parse_technique(const std::string& s) {
  if (s == "occlusion") return Technique::occlusion;
  if (s == "gradient") return Technique::gradient;
  if (s == "inputx") return Technique::input_x_gradient;
  if (s == "shapley") return Technique::shapley;
  fail(Errc::usage, "unknown saliency technique '" + s + "' (expected occlusion, gradient, inputx or shapley)");
}

inline std::string to_string(Technique t) {
  switch (t) {
    case Technique::occlusion: return "occlusion";
    case Technique::gradient: return "gradient";
    case Technique::input_x_gradient: return "inputx";
    case Technique::shapley: return "shapley";
  }
  return "?";
}

struct SaliencyOptions {
  Technique technique = Technique::occlusion;
  Aggregation aggregation = Aggregation::mean;
  std::size_t shapley_samples = 200;
  std::uint64_t seed = 13;
};

inline std::vector<double> saliency(const ModelAdapter& adapter, const TokenInstance& x, std::size_t cls,
                                    const SaliencyOptions& options) {
  switch (options.technique) {
    case Technique::occlusion: return saliency_occlusion(adapter, x, cls);
    case Technique::gradient: return saliency_gradient(adapter, x, cls, options.aggregation, false);
    case Technique::input_x_gradient: return saliency_gradient(adapter, x, cls, options.aggregation, true);
    case Technique::shapley:
      return saliency_shapley_sampling(adapter, x, cls, options.shapley_samples, options.seed ^ fnv1a(x.id));
  }
  return {};
}

/// Saliency for every instance at every class.
inline SaliencyTensor saliency_tensor(const ModelAdapter& adapter, const std::vector<TokenInstance>& instances,
                                      const SaliencyOptions& options) {
  SaliencyTensor out;
  for (const auto& x : instances)
    for (std::size_t k = 0; k < adapter.num_classes(); ++k)
      out.set(x.id, static_cast<int>(k), saliency(adapter, x, k, options));
  return out;
}

}  // namespace vek::xdiag
