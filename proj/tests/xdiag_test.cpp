#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vek/synth.hpp"
#include "vek/xdiag.hpp"

using vek::Errc;
using vek::Matrix;
namespace xd = vek::xdiag;

namespace {

// Predicts the same distribution whatever the input.
class ConstantAdapter final : public xd::ModelAdapter {
 public:
  std::size_t num_classes() const override { return 2; }
  std::vector<double> predict_distribution(const xd::TokenInstance&) const override { return {0.3, 0.7}; }
  std::vector<double> activation_summary(const xd::TokenInstance&) const override { return {1.0, 2.0}; }
  xd::TokenInstance mask_tokens(const xd::TokenInstance& x, std::span<const std::size_t> idx) const override {
    auto out = x;
    for (auto j : idx) out.presence[j] = 0.0;
    return out;
  }
};

// p_1 = 0.5 + sum_j a_j presence_j: probability is additive in masking.
class AdditiveAdapter final : public xd::ModelAdapter {
 public:
  explicit AdditiveAdapter(std::vector<double> a) : a_(std::move(a)) {}
  std::size_t num_classes() const override { return 2; }
  std::vector<double> predict_distribution(const xd::TokenInstance& x) const override {
    double p = 0.5;
    for (std::size_t j = 0; j < x.size(); ++j) p += a_[j] * x.presence[j];
    return {1.0 - p, p};
  }
  std::vector<double> activation_summary(const xd::TokenInstance& x) const override { return predict_distribution(x); }
  xd::TokenInstance mask_tokens(const xd::TokenInstance& x, std::span<const std::size_t> idx) const override {
    auto out = x;
    for (auto j : idx) out.presence[j] = 0.0;
    return out;
  }

 private:
  std::vector<double> a_;
};

// No masking, no gradients.
class OpaqueAdapter final : public xd::ModelAdapter {
 public:
  std::size_t num_classes() const override { return 2; }
  std::vector<double> predict_distribution(const xd::TokenInstance&) const override { return {0.5, 0.5}; }
  std::vector<double> activation_summary(const xd::TokenInstance&) const override { return {0.0}; }
};

xd::TokenInstance make_instance(const std::string& id, std::vector<std::string> tokens, std::optional<int> label = {}) {
  const std::size_t n = tokens.size();
  return {id, std::move(tokens), std::vector<double>(n, 1.0), label};
}

xd::BagOfTokensModel random_model(std::size_t classes, std::size_t vocab, std::uint64_t seed, double scale = 1.0) {
  std::vector<std::string> words;
  for (std::size_t v = 0; v < vocab; ++v) words.push_back("w" + std::to_string(v));
  return {words, vek::random_linear_prob(classes, vocab, scale, seed)};
}

xd::TokenInstance random_instance(const std::string& id, std::size_t len, std::size_t vocab, vek::Rng& rng) {
  std::vector<std::string> toks;
  for (std::size_t j = 0; j < len; ++j) toks.push_back("w" + std::to_string(rng.below(vocab)));
  return make_instance(id, toks);
}

std::vector<double> random_vector(std::size_t n, vek::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST(BagOfTokens, AdapterContract) {
  const auto model = random_model(3, 10, 1);
  vek::Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_instance("x", 1 + rng.below(12), 12, rng);  // includes unknown tokens
    const auto p = model.predict_distribution(x);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    EXPECT_EQ(model.activation_summary(x).size(), 3u);
    const std::size_t idx[] = {0};
    const auto once = model.mask_tokens(x, idx);
    EXPECT_EQ(model.mask_tokens(once, idx).presence, once.presence);
  }
}

TEST(BagOfTokens, JsonRoundTrip) {
  const auto model = random_model(2, 5, 3);
  const auto back = xd::parse_bag_of_tokens(vek::Json::parse(xd::to_json(model).dump()), "mem");
  EXPECT_EQ(back.vocabulary(), model.vocabulary());
  EXPECT_EQ(back.model().weights, model.model().weights);
  try {
    xd::parse_bag_of_tokens(vek::Json::parse(R"({"vocabulary":["a"],"weights":[[1],[2]],"bias":[0,0],"x":1})"), "mem");
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::schema);
  }
}

TEST(HumanAgreement, Examples) {
  vek::SaliencyTensor sal;
  sal.set("a", 1, {1.0, 0.0, 1.0});
  const vek::RationaleSet gold{{"a", {1, 0, 1}}};
  const std::map<std::string, int> labels{{"a", 1}};
  EXPECT_DOUBLE_EQ(xd::human_agreement_map(sal, gold, labels).map, 1.0);

  sal.set("a", 1, {0.2, 0.9, 0.1});
  EXPECT_DOUBLE_EQ(xd::human_agreement_map(sal, gold, labels).map, vek::average_precision(gold.at("a"), *sal.find("a", 1)));

  try {
    xd::human_agreement_map(sal, gold, {{"a", 0}});
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_saliency);
  }
}

TEST(HumanAgreement, MatchesOracleAndSkipsEmptyRationales) {
  vek::Rng rng(5);
  vek::SaliencyTensor sal;
  vek::RationaleSet gold;
  std::map<std::string, int> labels;
  double sum = 0;
  for (int i = 0; i < 50; ++i) {
    const std::string id = "i" + std::to_string(i);
    const std::size_t n = 1 + rng.below(15);
    std::vector<int> mask(n);
    std::vector<double> scores(n);
    for (std::size_t j = 0; j < n; ++j) {
      mask[j] = rng.uniform() < 0.4;
      scores[j] = static_cast<double>(rng.below(5));  // many ties
    }
    mask[rng.below(n)] = 1;
    const int label = static_cast<int>(rng.below(3));
    sal.set(id, label, scores);
    gold[id] = mask;
    labels[id] = label;
    sum += oracle::average_precision(mask, scores);
  }
  gold["empty"] = {0, 0};
  labels["empty"] = 0;
  sal.set("empty", 0, {1.0, 2.0});
  const auto r = xd::human_agreement_map(sal, gold, labels);
  EXPECT_NEAR(r.map, sum / 50.0, 1e-12);
  EXPECT_EQ(r.instances, 50u);
  EXPECT_EQ(r.skipped_no_positives, 1u);

  // monotone rescaling of each instance leaves MAP unchanged
  vek::SaliencyTensor rescaled;
  for (const auto& [key, scores] : sal.entries) {
    std::vector<double> t;
    for (double s : scores) t.push_back(std::exp(3.0 * s) - 7.0);
    rescaled.set(key.first, key.second, t);
  }
  EXPECT_EQ(xd::human_agreement_map(rescaled, gold, labels).map, r.map);
}

TEST(SaliencyDistance, Examples) {
  const std::vector<double> a{0.3, -0.2, 0.5};
  EXPECT_DOUBLE_EQ(xd::saliency_distance_features({&a, &a}, 0)[0], 0.0);
  const std::vector<double> ones{1, 1}, zeros{0, 0};
  EXPECT_DOUBLE_EQ(xd::saliency_distance_features({&zeros, &ones}, 1)[0], 2.0);

  vek::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> per(4, random_vector(6, rng));
    for (auto& v : per) v = random_vector(6, rng);
    const std::size_t k = rng.below(4);
    std::vector<double> sums;
    for (std::size_t c = 0; c < 4; ++c) {
      if (c == k) continue;
      double d = 0;
      for (std::size_t j = 0; j < 6; ++j) d += per[k][j] - per[c][j];
      sums.push_back(d);
    }
    const double mx = std::max({sums[0], sums[1], sums[2]});
    const double mn = std::min({sums[0], sums[1], sums[2]});
    const double avg = (sums[0] + sums[1] + sums[2]) / 3.0;
    const auto f = xd::saliency_distance_features({&per[0], &per[1], &per[2], &per[3]}, k);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_NEAR(f[0], mx, 1e-12);
    EXPECT_NEAR(f[1], mn, 1e-12);
    EXPECT_NEAR(f[2], avg, 1e-12);
  }
  try {
    xd::saliency_distance_features({&a, nullptr}, 0);
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_class);
  }
}

TEST(ConfidenceIndication, ConstantTarget) {
  vek::Rng rng(7);
  Matrix x(40, 1);
  for (std::size_t i = 0; i < 40; ++i) x(i, 0) = rng.normal();
  const std::vector<double> y(40, 0.8);
  const auto r = xd::confidence_indication(x, y, {});
  EXPECT_LE(r.mae, 1e-12);
  EXPECT_EQ(r.fold_mae.size(), 5u);
}

TEST(ConfidenceIndication, PlantedSigmoid) {
  vek::Rng rng(8);
  Matrix x(300, 1);
  std::vector<double> y(300);
  for (std::size_t i = 0; i < 300; ++i) {
    x(i, 0) = rng.normal(0.0, 2.0);
    y[i] = 1.0 / (1.0 + std::exp(-x(i, 0)));
  }
  EXPECT_LE(xd::confidence_indication(x, y, {}).mae, 0.05);
  xd::ConfidenceConfig up;
  up.upsample = true;
  EXPECT_LE(xd::confidence_indication(x, y, up).mae, 0.05);
}

TEST(ConfidenceIndication, UpsampleBalancesDeciles) {
  vek::Rng rng(9);
  std::vector<double> y(200);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = std::pow(rng.uniform(), 3.0);  // skewed towards low deciles
    rows.push_back(i);
  }
  vek::Rng draw(1);
  const auto out = xd::upsample_deciles(rows, y, draw);
  std::vector<std::size_t> before(10), after(10);
  for (auto i : rows) ++before[xd::confidence_decile(y[i])];
  for (auto i : out) ++after[xd::confidence_decile(y[i])];
  const auto target = *std::max_element(before.begin(), before.end());
  for (std::size_t d = 0; d < 10; ++d) EXPECT_EQ(after[d], before[d] == 0 ? 0 : target);
}

TEST(ConfidenceIndication, TooFewInstances) {
  try {
    xd::confidence_indication(Matrix(9, 1), std::vector<double>(9, 0.5), {});
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::too_few_instances);
  }
}

TEST(Thresholds, Parsing) {
  EXPECT_EQ(xd::parse_thresholds("0,10,...,100"), xd::default_thresholds());
  EXPECT_EQ(xd::parse_thresholds("0, 50,100"), (std::vector<int>{0, 50, 100}));
  EXPECT_THROW(xd::parse_thresholds("0,x"), vek::Error);
  EXPECT_THROW(xd::parse_thresholds("0,120"), vek::Error);
}

TEST(Faithfulness, ConstantAdapterAndAnchors) {
  ConstantAdapter constant;
  vek::Rng rng(10);
  std::vector<xd::TokenInstance> xs;
  std::vector<std::vector<double>> sal;
  for (int i = 0; i < 20; ++i) {
    auto x = random_instance("i" + std::to_string(i), 5, 10, rng);
    x.label = static_cast<int>(rng.below(2));
    xs.push_back(x);
    sal.push_back(random_vector(5, rng));
  }
  const auto r = xd::faithfulness_auctp(constant, xs, sal, xd::Metric::macro_f1, xd::default_thresholds());
  EXPECT_EQ(r.auc, 0.0);
  EXPECT_EQ(r.points.front().second, 0.0);

  auto reversed = xd::default_thresholds();
  std::reverse(reversed.begin(), reversed.end());
  const auto model = random_model(2, 10, 11, 2.0);
  const auto fwd = xd::faithfulness_auctp(model, xs, sal, xd::Metric::accuracy, xd::default_thresholds());
  const auto bwd = xd::faithfulness_auctp(model, xs, sal, xd::Metric::accuracy, reversed);
  EXPECT_EQ(fwd.auc, bwd.auc);
  EXPECT_EQ(fwd.points.front().second, 0.0);

  OpaqueAdapter opaque;
  try {
    xd::faithfulness_auctp(opaque, xs, sal, xd::Metric::accuracy, xd::default_thresholds());
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::mask_unsupported);
  }
}

TEST(Faithfulness, TopSalientTieBreak) {
  const std::vector<double> s{0.5, 0.9, 0.5, 0.9};
  EXPECT_EQ(xd::top_salient(s, 3), (std::vector<std::size_t>{1, 3, 0}));
}

TEST(Faithfulness, PlantedContributionBeatsRandom) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    vek::synth::TokensConfig cfg;
    cfg.n = 150;
    const auto corpus = vek::synth::tokens(cfg, seed);
    const auto xs = xd::to_token_instances(corpus.dataset);
    std::vector<std::vector<double>> planted, random;
    vek::Rng rng(seed + 1000);
    for (const auto& x : xs) {
      planted.push_back(vek::synth::planted_contributions(corpus.model, x, static_cast<std::size_t>(corpus.model.predict(x))));
      std::vector<double> r(x.size());
      for (auto& v : r) v = rng.uniform();
      random.push_back(r);
    }
    const auto a = xd::faithfulness_auctp(corpus.model, xs, planted, xd::Metric::macro_f1, xd::default_thresholds());
    const auto b = xd::faithfulness_auctp(corpus.model, xs, random, xd::Metric::macro_f1, xd::default_thresholds());
    wins += a.auc > b.auc;
  }
  EXPECT_EQ(wins, 5);
}

TEST(Occlusion, Examples) {
  ConstantAdapter constant;
  const auto x = make_instance("a", {"w0", "w1", "w2"});
  EXPECT_EQ(xd::saliency_occlusion(constant, x, 1), (std::vector<double>{0, 0, 0}));

  const auto model = random_model(2, 3, 12);
  const auto single = make_instance("s", {"w1"});
  const auto& w = model.model().weights;
  const auto& b = model.model().bias;
  auto p1 = [&](double presence) {
    const double z0 = b[0] + w(0, 1) * presence, z1 = b[1] + w(1, 1) * presence;
    return std::exp(z1) / (std::exp(z0) + std::exp(z1));
  };
  const auto s = xd::saliency_occlusion(model, single, 1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0], p1(1.0) - p1(0.0), 1e-12);
}

TEST(Gradient, LinearIdentityAndFiniteDifferences) {
  const auto model = random_model(3, 8, 13, 1.5);
  vek::Rng rng(14);
  const auto x = random_instance("g", 6, 8, rng);
  for (std::size_t cls = 0; cls < 3; ++cls) {
    const auto g = model.token_gradients(x, cls, xd::GradientTarget::logit);
    for (std::size_t j = 0; j < x.size(); ++j)
      EXPECT_EQ(g[j], model.model().weights(cls, *model.vocab_index(x.tokens[j])));

    const auto analytic = xd::saliency_gradient(model, x, cls, xd::Aggregation::mean, false);
    const double h = 1e-5;
    for (std::size_t j = 0; j < x.size(); ++j) {
      auto up = x, down = x;
      up.presence[j] += h;
      down.presence[j] -= h;
      const double fd = (model.predict_distribution(up)[cls] - model.predict_distribution(down)[cls]) / (2 * h);
      EXPECT_LE(std::abs(fd - analytic[j]) / std::max(std::abs(fd), 1e-8), 1e-4);
    }
  }
  auto zero = x;
  zero.presence[2] = 0.0;
  EXPECT_EQ(xd::saliency_gradient(model, zero, 0, xd::Aggregation::mean, true)[2], 0.0);
  const auto l2 = xd::saliency_gradient(model, x, 0, xd::Aggregation::l2, false);
  for (double v : l2) EXPECT_GE(v, 0.0);

  OpaqueAdapter opaque;
  try {
    xd::saliency_gradient(opaque, x, 0, xd::Aggregation::mean, false);
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::gradient_unsupported);
  }
}

TEST(Shapley, MatchesExactEnumeration) {
  vek::Rng rng(15);
  for (int trial = 0; trial < 6; ++trial) {
    const auto model = random_model(2, 6, 100 + trial, 2.0);
    const std::size_t n = 2 + rng.below(7);
    const auto x = random_instance("s", n, 6, rng);
    const auto exact = oracle::exact_shapley(n, [&](std::size_t mask) {
      auto y = x;
      for (std::size_t j = 0; j < n; ++j)
        if (!(mask & (std::size_t{1} << j))) y.presence[j] = 0.0;
      return model.predict_distribution(y)[1];
    });
    const auto sampled = xd::saliency_shapley_sampling(model, x, 1, 2000, 7 + trial);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(sampled[j], exact[j], 0.02);

    auto empty = x;
    for (auto& p : empty.presence) p = 0.0;
    const double total = std::accumulate(sampled.begin(), sampled.end(), 0.0);
    EXPECT_NEAR(total, model.predict_distribution(x)[1] - model.predict_distribution(empty)[1], 0.02);
  }
}

TEST(Shapley, AdditiveModelMatchesOcclusion) {
  const AdditiveAdapter additive({0.05, -0.1, 0.2, 0.0, 0.03});
  const auto x = make_instance("a", {"a", "b", "c", "d", "e"});
  const auto sh = xd::saliency_shapley_sampling(additive, x, 1, 50, 3);
  const auto oc = xd::saliency_occlusion(additive, x, 1);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(sh[j], oc[j], 1e-12);
}

TEST(Shapley, ZeroPresenceTokenScoresZeroAndIsDeterministic) {
  const auto model = random_model(2, 5, 16);
  auto x = make_instance("z", {"w0", "w1", "w2", "w3"});
  x.presence[1] = 0.0;
  const auto a = xd::saliency_shapley_sampling(model, x, 0, 100, 9);
  EXPECT_EQ(a[1], 0.0);
  EXPECT_EQ(a, xd::saliency_shapley_sampling(model, x, 0, 100, 9));
}

namespace {

std::vector<double> scaled(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) out.push_back(*hi == *lo ? 0.0 : (x - *lo) / (*hi - *lo));
  return out;
}

}  // namespace

TEST(RationaleConsistency, DuplicateAdaptersAreDegenerate) {
  const auto model = random_model(2, 6, 17);
  vek::Rng rng(18);
  std::vector<xd::TokenInstance> xs;
  for (int i = 0; i < 10; ++i) {
    auto x = random_instance("i" + std::to_string(i), 4, 6, rng);
    x.label = static_cast<int>(rng.below(2));
    xs.push_back(x);
  }
  const auto sal = xd::saliency_tensor(model, xs, {});
  try {
    xd::rationale_consistency({&model, &model}, xs, {sal, sal});
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_variance);
  }
}

TEST(RationaleConsistency, PlantedMonotoneGivesOne) {
  vek::Rng rng(19);
  std::vector<xd::VectorsById> acts(2), sals(2);
  std::vector<std::string> ids;
  for (int i = 0; i < 15; ++i) {
    const std::string id = "i" + std::to_string(i);
    ids.push_back(id);
    // the second model's saliency offset is a monotone function of its activation offset
    const double a = rng.uniform(0.0, 10.0);
    acts[0][id] = {1.0, 0.0};
    sals[0][id] = {0.5};
    acts[1][id] = {1.0 + a, 0.0};
    sals[1][id] = {0.5 + std::exp(a / 3.0)};
  }
  EXPECT_NEAR(xd::rationale_consistency(acts, sals, ids).rho, 1.0, 1e-12);
}

TEST(RationaleConsistency, MatchesOracleAndAffineInvariance) {
  vek::Rng rng(20);
  std::vector<xd::VectorsById> acts(4), sals(4);
  std::vector<std::string> ids;
  for (int i = 0; i < 12; ++i) ids.push_back("i" + std::to_string(i));
  for (int m = 0; m < 4; ++m)
    for (const auto& id : ids) {
      acts[m][id] = random_vector(3, rng);
      auto s = random_vector(5, rng);
      for (auto& v : s) v = std::round(v * 2) / 2;  // ties in distances are likely
      sals[m][id] = s;
    }
  std::vector<double> da, ds;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      for (const auto& id : ids) {
        double sa = 0, ss = 0;
        for (std::size_t j = 0; j < 3; ++j) sa += std::pow(acts[a][id][j] - acts[b][id][j], 2);
        for (std::size_t j = 0; j < 5; ++j) ss += std::pow(sals[a][id][j] - sals[b][id][j], 2);
        da.push_back(std::sqrt(sa));
        ds.push_back(std::sqrt(ss));
      }
  const auto r = xd::rationale_consistency(acts, sals, ids);
  EXPECT_NEAR(r.rho, oracle::spearman(scaled(da), scaled(ds)), 1e-12);
  EXPECT_EQ(r.points, 6u * 12u);
  EXPECT_EQ(r.pairs.size(), 6u);
  EXPECT_GE(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);

  auto stretched = acts;
  for (auto& m : stretched)
    for (auto& [id, v] : m)
      for (auto& x : v) x *= 3.5;
  EXPECT_NEAR(xd::rationale_consistency(stretched, sals, ids).rho, r.rho, 1e-12);
}

TEST(DatasetConsistency, ExhaustiveFallbackAndDuplicates) {
  vek::Rng rng(21);
  std::vector<xd::TokenInstance> xs;
  for (int i = 0; i < 8; ++i) xs.push_back(random_instance("i" + std::to_string(i), 5, 6, rng));
  const auto sel = xd::select_pairs(xs, 2000, 2000, 1);
  EXPECT_EQ(sel.pairs.size(), 28u);
  EXPECT_EQ(sel.random_pairs, 0u);

  const auto partial = xd::select_pairs(xs, 5, 10, 1);
  EXPECT_EQ(partial.overlap_pairs, 5u);
  EXPECT_EQ(partial.random_pairs, 10u);
  std::set<std::pair<std::size_t, std::size_t>> unique(partial.pairs.begin(), partial.pairs.end());
  EXPECT_EQ(unique.size(), 15u);

  EXPECT_EQ(xd::vector_distance(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  EXPECT_EQ(xd::vector_distance(std::vector<double>{3}, std::vector<double>{0, 4}), 5.0);
}

TEST(DatasetConsistency, OverlapRanking) {
  std::vector<xd::TokenInstance> xs{make_instance("a", {"x", "y", "z"}), make_instance("b", {"x", "y", "q"}),
                                    make_instance("c", {"x", "r", "s"}), make_instance("d", {"t", "u", "v"})};
  const auto sel = xd::select_pairs(xs, 3, 0, 1);
  using P = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(sel.pairs, (std::vector<P>{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(DatasetConsistency, MatchesOracle) {
  const auto model = random_model(2, 10, 22, 2.0);
  vek::Rng rng(23);
  std::vector<xd::TokenInstance> xs;
  for (int i = 0; i < 30; ++i) {
    auto x = random_instance("i" + std::to_string(i), 3 + rng.below(5), 10, rng);
    x.label = static_cast<int>(rng.below(2));
    xs.push_back(x);
  }
  const auto sal = xd::saliency_tensor(model, xs, {});
  const auto r = xd::dataset_consistency(model, xs, sal, 100, 50, 4);
  const auto sel = xd::select_pairs(xs, 100, 50, 4);
  std::vector<double> da, ds;
  for (const auto& [a, b] : sel.pairs) {
    da.push_back(xd::vector_distance(model.activation_summary(xs[a]), model.activation_summary(xs[b])));
    ds.push_back(xd::vector_distance(*sal.find(xs[a].id, *xs[a].label), *sal.find(xs[b].id, *xs[b].label)));
  }
  EXPECT_NEAR(r.rho, oracle::spearman(scaled(da), scaled(ds)), 1e-12);
  EXPECT_EQ(r.pairs, 150u);
}
