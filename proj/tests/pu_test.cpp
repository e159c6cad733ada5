#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "vek/pu.hpp"
#include "vek/synth.hpp"

using vek::Errc;
using vek::Matrix;
namespace pu = vek::pu;

namespace {

vek::Instance make(const std::string& id, double x, std::optional<vek::PuFlag> flag, std::optional<int> label = {}) {
  vek::Instance inst;
  inst.id = id;
  inst.features = std::vector<double>{x};
  inst.pu_flag = flag;
  inst.label = label;
  return inst;
}

// Model whose positive-class probability is sigmoid(logit) regardless of x.
vek::LinearProbModel constant_model(double p_positive) {
  const double logit = std::log(p_positive / (1 - p_positive));
  return {Matrix(2, 1), {0.0, logit}};
}

}  // namespace

TEST(EstimateC, Examples) {
  const auto all_one = Matrix::from_rows({{1.0}, {2.0}});
  vek::LinearProbModel saturated{Matrix(2, 1), {-1000.0, 1000.0}};
  EXPECT_DOUBLE_EQ(pu::estimate_c(saturated, all_one), 1.0);

  // probabilities 0.2, 0.4, 0.6 through a 1-feature logit model
  vek::LinearProbModel m{Matrix::from_rows({{0.0}, {1.0}}), {0.0, 0.0}};
  const auto rows = Matrix::from_rows({{std::log(0.2 / 0.8)}, {std::log(0.4 / 0.6)}, {std::log(0.6 / 0.4)}});
  EXPECT_NEAR(pu::estimate_c(m, rows), 0.4, 1e-12);

  try {
    pu::estimate_c(m, Matrix(0, 1));
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_validation);
  }
}

TEST(InstanceWeight, Examples) {
  EXPECT_DOUBLE_EQ(pu::instance_weight(0.5, 0.5), 1.0);
  EXPECT_NEAR(pu::instance_weight(0.6, 0.8), 0.375, 1e-15);
  EXPECT_EQ(pu::instance_weight(0.3, 1.0), 0.0);
  EXPECT_EQ(pu::instance_weight(1.0, 1.0), 0.0);
  EXPECT_TRUE(std::isfinite(pu::instance_weight(1.0, 0.1)));
  EXPECT_THROW(pu::instance_weight(0.5, 0.0), vek::Error);
  EXPECT_THROW(pu::instance_weight(0.5, -1.0), vek::Error);
}

TEST(InstanceWeight, Monotonicity) {
  vek::Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const double c = rng.uniform(0.01, 0.99);
    const double p1 = rng.uniform(0.001, 0.999), p2 = rng.uniform(0.001, 0.999);
    const double lo = std::min(p1, p2), hi = std::max(p1, p2);
    EXPECT_LE(pu::instance_weight(lo, c), pu::instance_weight(hi, c));
    const double c2 = std::min(0.999, c + rng.uniform(0.0, 0.5));
    EXPECT_GE(pu::instance_weight(lo, c), pu::instance_weight(lo, c2));
  }
}

TEST(WeightedTrainingSet, Examples) {
  const vek::FeatureDataset labelled_only({make("a", 1.0, vek::PuFlag::labelled), make("b", 2.0, vek::PuFlag::labelled)});
  pu::PUWeightTable empty;
  const auto id = pu::build_weighted_training_set(labelled_only, empty);
  EXPECT_EQ(id.labels, (std::vector<int>{1, 1}));
  EXPECT_EQ(id.weights, (std::vector<double>{1.0, 1.0}));

  const vek::FeatureDataset one({make("u", 3.0, vek::PuFlag::unlabelled)});
  pu::PUWeightTable table;
  table.entries.push_back({"u", false, 0.5, 0.3, false});
  const auto dup = pu::build_weighted_training_set(one, table);
  ASSERT_EQ(dup.labels.size(), 2u);
  EXPECT_EQ(dup.labels[0], 1);
  EXPECT_DOUBLE_EQ(dup.weights[0], 0.3);
  EXPECT_EQ(dup.labels[1], 0);
  EXPECT_DOUBLE_EQ(dup.weights[1], 0.7);

  try {
    pu::build_weighted_training_set(one, empty);
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_weight);
  }
}

TEST(WeightedTrainingSet, MassConservation) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    vek::synth::ScarConfig cfg;
    cfg.n = 300;
    const auto ds = vek::synth::scar(cfg, seed);
    vek::Rng rng(seed);
    auto table = pu::compute_weight_table(ds, vek::random_linear_prob(2, 2, 1.0, seed), rng.uniform(0.05, 1.0));
    table.prior_estimate = pu::estimate_prior(table);
    if (seed % 2) table = pu::puc_convert(std::move(table));
    const auto set = pu::build_weighted_training_set(ds, table);
    std::size_t positives = 0;
    for (const auto& inst : ds.instances()) positives += pu::is_labelled(inst);
    EXPECT_NEAR(set.total_weight(), static_cast<double>(ds.size()), 1e-9);
    EXPECT_EQ(positives + (ds.size() - positives), ds.size());
  }
}

TEST(EstimatePrior, Examples) {
  const vek::FeatureDataset all_labelled({make("a", 1.0, vek::PuFlag::labelled), make("b", -1.0, vek::PuFlag::labelled)});
  EXPECT_DOUBLE_EQ(pu::estimate_prior(all_labelled, constant_model(0.3), 0.5), 1.0);

  const vek::FeatureDataset mixed({make("a", 1.0, vek::PuFlag::labelled), make("b", -1.0, vek::PuFlag::unlabelled),
                                   make("c", 0.0, vek::PuFlag::unlabelled), make("d", 2.0, vek::PuFlag::unlabelled)});
  // c = 1 makes every weight zero
  EXPECT_DOUBLE_EQ(pu::estimate_prior(mixed, constant_model(0.3), 1.0), 0.25);
}

TEST(PucConvert, StoppingRuleAndTieBreak) {
  pu::PUWeightTable table;
  table.c_estimate = 0.5;
  table.prior_estimate = 0.5;
  table.entries = {{"a", true, 0.5, 1.0, false}, {"b", true, 0.5, 1.0, false}, {"u1", false, 0.2, 0.25, false}};
  EXPECT_EQ(pu::puc_convert(table).conversions(), 0u);  // 2/3 already >= 0.5

  pu::PUWeightTable tie;
  tie.c_estimate = 0.5;
  tie.prior_estimate = 0.5;
  tie.entries = {{"l", true, 0.5, 1.0, false}, {"zeta", false, 0.4, 2.0 / 3.0, false},
                 {"alpha", false, 0.4, 2.0 / 3.0, false}, {"low", false, 0.1, 1.0 / 9.0, false}};
  const auto out = pu::puc_convert(tie);
  EXPECT_EQ(out.conversions(), 1u);
  EXPECT_TRUE(out.find("alpha")->converted);
  EXPECT_FALSE(out.find("zeta")->converted);
}

TEST(PucConvert, PrefixAndMinimality) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    vek::synth::ScarConfig cfg;
    cfg.n = 400;
    const auto ds = vek::synth::scar(cfg, seed);
    vek::Rng rng(seed + 100);
    auto table = pu::compute_weight_table(ds, vek::random_linear_prob(2, 2, 2.0, seed), rng.uniform(0.2, 0.9));
    table.prior_estimate = rng.uniform(0.0, 1.0);
    const auto out = pu::puc_convert(table);
    EXPECT_EQ(pu::check_invariants(out), std::nullopt);
    std::size_t labelled = 0;
    for (const auto& e : out.entries) labelled += e.labelled;
    const double n = static_cast<double>(out.entries.size());
    const double frac = static_cast<double>(labelled + out.conversions()) / n;
    const std::size_t unlabelled = out.entries.size() - labelled;
    if (out.conversions() < unlabelled) EXPECT_GE(frac, *out.prior_estimate);
    if (out.conversions() > 0)
      EXPECT_LT(static_cast<double>(labelled + out.conversions() - 1) / n, *out.prior_estimate);
  }
}

TEST(Pipeline, PnOnFullyLabelledDataEqualsPlainTraining) {
  vek::synth::ScarConfig cfg;
  cfg.n = 200;
  auto ds = vek::synth::scar(cfg, 3);
  std::vector<vek::Instance> plain;
  for (auto inst : ds.instances()) {
    inst.pu_flag.reset();  // PN data: label only
    plain.push_back(inst);
  }
  const vek::FeatureDataset pn(plain);
  pu::PipelineConfig pc;
  pc.mode = pu::Mode::pn;
  pc.train.epochs = 300;
  const auto fit = pu::fit_pu_pipeline(pn, pc);

  std::vector<int> labels;
  for (const auto& inst : pn.instances()) labels.push_back(*inst.label);
  auto tc = pc.train;
  tc.num_classes = 2;
  const auto direct = vek::train_linear_prob(pn.feature_matrix(), labels, tc);
  EXPECT_EQ(fit.model.weights, direct.weights);
  EXPECT_EQ(fit.model.bias, direct.bias);
}

TEST(Pipeline, PuTablePassesInvariantsAndIsReproducible) {
  vek::synth::ScarConfig cfg;
  cfg.n = 1000;
  const auto ds = vek::synth::scar(cfg, 5);
  pu::PipelineConfig pc;
  pc.mode = pu::Mode::pu;
  const auto a = pu::fit_pu_pipeline(ds, pc);
  ASSERT_TRUE(a.weights.has_value());
  EXPECT_EQ(pu::check_invariants(*a.weights), std::nullopt);
  EXPECT_EQ(a.weights->conversions(), 0u);
  const auto b = pu::fit_pu_pipeline(ds, pc);
  EXPECT_EQ(a.model.weights, b.model.weights);

  pc.mode = pu::Mode::puc;
  const auto c1 = pu::fit_pu_pipeline(ds, pc);
  const auto c2 = pu::fit_pu_pipeline(ds, pc);
  EXPECT_EQ(c1.model.weights, c2.model.weights);
  EXPECT_EQ(c1.model.bias, c2.model.bias);
  EXPECT_EQ(pu::check_invariants(*c1.weights), std::nullopt);
  EXPECT_GT(c1.weights->conversions(), 0u);
}

TEST(Pipeline, ScarRecoversCAndPrior) {
  // SCAR simulation with known truth: c = 0.5 and p(y=1) = 0.5.
  vek::synth::ScarConfig cfg;
  const auto ds = vek::synth::scar(cfg, 17);
  pu::PipelineConfig pc;
  pc.mode = pu::Mode::puc;
  const auto fit = pu::fit_pu_pipeline(ds, pc);
  EXPECT_NEAR(fit.weights->c_estimate, 0.5, 0.05);
  EXPECT_NEAR(*fit.weights->prior_estimate, 0.5, 0.05);

  std::size_t converted = 0, converted_true = 0, unlabelled = 0, unlabelled_true = 0;
  for (const auto& e : fit.weights->entries) {
    if (e.labelled) continue;
    const bool truth = *ds.find(e.id)->label == 1;
    ++unlabelled;
    unlabelled_true += truth;
    if (e.converted) {
      ++converted;
      converted_true += truth;
    }
  }
  ASSERT_GT(converted, 0u);
  const double base = static_cast<double>(unlabelled_true) / static_cast<double>(unlabelled);
  EXPECT_GE(static_cast<double>(converted_true) / static_cast<double>(converted) - base, 0.2);
}
