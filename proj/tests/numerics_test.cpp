#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vek/numerics.hpp"

using vek::Errc;
using vek::Matrix;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  vek::Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

template <typename F>
void expect_errc(F&& f, Errc code) {
  try {
    f();
    FAIL() << "expected " << vek::errc_name(code);
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Pca, SingleAxisData) {
  const auto data = Matrix::from_rows({{-1, 0}, {1, 0}});
  const auto s = vek::pca_fit(data, 1);
  EXPECT_NEAR(s.components(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.components(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(s.eigenvalues[0], 2.0, 1e-12);
}

TEST(Pca, FullRankIsOrthonormal) {
  const auto data = random_matrix(50, 6, 3);
  const auto s = vek::pca_fit(data, 6);
  const auto gram = s.components.transpose() * s.components;
  EXPECT_LE(vek::max_abs_diff(gram, Matrix::identity(6)), 1e-8);
  for (std::size_t i = 1; i < s.eigenvalues.size(); ++i) EXPECT_GE(s.eigenvalues[i - 1], s.eigenvalues[i]);
}

TEST(Pca, MatchesAnalytic2x2Eigensolver) {
  vek::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix data(200, 2);
    const double rho = rng.uniform(-0.9, 0.9);
    for (std::size_t r = 0; r < data.rows(); ++r) {
      const double a = rng.normal(), b = rng.normal();
      data(r, 0) = 2.0 * a + 1.0;
      data(r, 1) = rho * a + std::sqrt(1 - rho * rho) * b - 3.0;
    }
    // oracle covariance computed directly
    double mx = 0, my = 0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      mx += data(r, 0);
      my += data(r, 1);
    }
    mx /= 200;
    my /= 200;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      sxx += (data(r, 0) - mx) * (data(r, 0) - mx);
      sxy += (data(r, 0) - mx) * (data(r, 1) - my);
      syy += (data(r, 1) - my) * (data(r, 1) - my);
    }
    const auto e = oracle::eig2x2(sxx / 199, sxy / 199, syy / 199);
    const auto s = vek::pca_fit(data, 2);
    EXPECT_NEAR(s.eigenvalues[0], e.l1, 1e-8);
    EXPECT_NEAR(s.eigenvalues[1], e.l2, 1e-8);
    EXPECT_NEAR(s.components(0, 0), e.v1x, 1e-8);
    EXPECT_NEAR(s.components(1, 0), e.v1y, 1e-8);
  }
}

TEST(Pca, ProjectionVarianceEqualsEigenvalues) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto data = random_matrix(80, 5, seed);
    for (std::size_t r = 0; r < data.rows(); ++r) data(r, 1) += 0.5 * data(r, 0);
    const auto s = vek::pca_fit(data, 3);
    EXPECT_LE(vek::max_abs_diff(s.components.transpose() * s.components, Matrix::identity(3)), 1e-8);
    const auto scores = vek::project(data, s);
    for (std::size_t c = 0; c < 3; ++c) {
      double var = 0;
      for (std::size_t r = 0; r < scores.rows(); ++r) var += scores(r, c) * scores(r, c);
      var /= static_cast<double>(scores.rows() - 1);
      EXPECT_NEAR(var / s.eigenvalues[c], 1.0, 1e-6);
    }
    // sign convention
    for (std::size_t c = 0; c < 3; ++c) {
      std::size_t best = 0;
      for (std::size_t r = 1; r < 5; ++r)
        if (std::abs(s.components(r, c)) > std::abs(s.components(best, c))) best = r;
      EXPECT_GE(s.components(best, c), 0.0);
    }
  }
}

TEST(Pca, Errors) {
  const auto data = Matrix::from_rows({{-1, 0}, {1, 0}, {3, 0}});
  expect_errc([&] { vek::pca_fit(data, 0); }, Errc::dimension);
  expect_errc([&] { vek::pca_fit(data, 3); }, Errc::dimension);
  expect_errc([&] { vek::pca_fit(Matrix::from_rows({{1.0, 2.0}}), 1); }, Errc::dimension);
  try {
    vek::pca_fit(data, 2);
    FAIL();
  } catch (const vek::Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_data);
    EXPECT_NE(std::string(e.what()).find("rank 1"), std::string::npos);
  }
}

TEST(Spearman, IdenticalAndReversed) {
  std::vector<double> a{1, 2, 3}, b{1, 2, 3}, c{3, 2, 1};
  EXPECT_DOUBLE_EQ(vek::spearman_rho(a, b), 1.0);
  EXPECT_DOUBLE_EQ(vek::spearman_rho(a, c), -1.0);
}

TEST(Spearman, TiesMatchRankThenPearsonOracle) {
  std::vector<double> a{1, 2, 2, 3}, b{2, 1, 3, 3};
  const double expected = oracle::spearman(a, b);
  EXPECT_NEAR(expected, 0.5, 1e-15);  // frozen: ranks (1,2.5,2.5,4) vs (2,1,3.5,3.5)
  EXPECT_NEAR(vek::spearman_rho(a, b), expected, 1e-12);
}

TEST(Spearman, Properties) {
  vek::Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(30);
    std::vector<double> a(n), b(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = std::round(rng.normal() * 3);  // rounding creates ties
      b[i] = std::round(rng.normal() * 3);
      g[i] = std::exp(a[i]) + 2.0;  // strictly increasing transform
    }
    try {
      const double rho = vek::spearman_rho(a, b);
      EXPECT_NEAR(rho, vek::spearman_rho(b, a), 1e-15);
      EXPECT_NEAR(rho, oracle::spearman(a, b), 1e-12);
      EXPECT_LE(std::abs(rho), 1.0);
      EXPECT_NEAR(vek::spearman_rho(a, g), 1.0, 1e-12);
    } catch (const vek::Error& e) {
      EXPECT_EQ(e.code(), Errc::zero_variance);
    }
  }
}

TEST(Spearman, ConstantInputIsZeroVariance) {
  std::vector<double> a{1, 1, 1}, b{1, 2, 3};
  expect_errc([&] { vek::spearman_rho(a, b); }, Errc::zero_variance);
  expect_errc([&] { vek::spearman_rho(b, a); }, Errc::zero_variance);
}

TEST(AveragePrecision, Examples) {
  std::vector<int> g1{1, 1, 0};
  std::vector<double> s1{0.9, 0.8, 0.1};
  EXPECT_DOUBLE_EQ(vek::average_precision(g1, s1), 1.0);

  std::vector<int> g2{1, 0, 1};
  std::vector<double> s2{0.9, 0.8, 0.7};
  EXPECT_NEAR(vek::average_precision(g2, s2), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_NEAR(oracle::average_precision(g2, s2), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);

  std::vector<int> g3{0, 0, 0};
  expect_errc([&] { vek::average_precision(g3, s2); }, Errc::no_positives);
}

TEST(AveragePrecision, TiesResolveToLowerIndex) {
  std::vector<int> gold{0, 1};
  std::vector<double> scores{0.5, 0.5};
  EXPECT_DOUBLE_EQ(vek::average_precision(gold, scores), 0.5);
}

TEST(AveragePrecision, MatchesOracleAndMonotoneInvariance) {
  vek::Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(25);
    std::vector<int> gold(n);
    std::vector<double> scores(n), transformed(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = rng.uniform() < 0.4;
      scores[i] = std::round(rng.normal() * 4) / 4;
      transformed[i] = 3.0 * std::tanh(scores[i]) - 7.0;
    }
    gold[rng.below(n)] = 1;
    const double ap = vek::average_precision(gold, scores);
    EXPECT_NEAR(ap, oracle::average_precision(gold, scores), 1e-12);
    EXPECT_NEAR(ap, vek::average_precision(gold, transformed), 1e-12);
    EXPECT_GT(ap, 0.0);
    EXPECT_LE(ap, 1.0);
  }
}

TEST(MinMax, Examples) {
  std::vector<double> a{0, 5, 10}, b{7, 7, 7};
  EXPECT_EQ(vek::minmax_scale(a), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(vek::minmax_scale(b), (std::vector<double>{0, 0, 0}));
  vek::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(2 + rng.below(20));
    for (double& x : v) x = rng.normal() * 100;
    const auto s = vek::minmax_scale(v);
    EXPECT_EQ(*std::min_element(s.begin(), s.end()), 0.0);
    EXPECT_EQ(*std::max_element(s.begin(), s.end()), 1.0);
  }
}

TEST(LinearProb, PredictProbaExamples) {
  vek::LinearProbModel zero{Matrix(3, 4), {0, 0, 0}};
  std::vector<double> x{1, 2, 3, 4};
  for (double p : vek::predict_proba(zero, x)) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);

  vek::LinearProbModel binary{Matrix::from_rows({{1.0, -1.0}, {1.0, -1.0}}), {0.25, 0.25}};
  std::vector<double> y{3, 3};
  const auto p = vek::predict_proba(binary, y);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);

  const auto model = vek::random_linear_prob(4, 3, 1.0, 77);
  std::vector<double> z{0.3, -1.2, 2.0};
  const auto q = vek::predict_proba(model, z);
  double denom = 0;
  std::vector<double> num(4);
  for (std::size_t k = 0; k < 4; ++k) {
    double logit = model.bias[k];
    for (std::size_t j = 0; j < 3; ++j) logit += model.weights(k, j) * z[j];
    num[k] = std::exp(logit);
    denom += num[k];
  }
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(q[k], num[k] / denom, 1e-12);

  std::vector<double> wrong{1, 2};
  expect_errc([&] { vek::predict_proba(model, wrong); }, Errc::dimension);
}

TEST(LinearProb, GradientMatchesFiniteDifferences) {
  const auto data = random_matrix(30, 4, 21);
  vek::Rng rng(22);
  std::vector<int> labels(30);
  std::vector<double> weights(30);
  for (std::size_t i = 0; i < 30; ++i) {
    labels[i] = static_cast<int>(rng.below(3));
    weights[i] = rng.uniform(0.1, 2.0);
  }
  auto model = vek::random_linear_prob(3, 4, 0.5, 23);
  const double l2 = 0.01;
  const auto lg = vek::loss_and_gradient(model, data, labels, weights, l2);
  const double h = 1e-5;
  double worst = 0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-8, std::max(std::abs(a), std::abs(b))); };
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t j = 0; j < 4; ++j) {
      auto plus = model, minus = model;
      plus.weights(k, j) += h;
      minus.weights(k, j) -= h;
      const double fd = (vek::loss_and_gradient(plus, data, labels, weights, l2).loss -
                         vek::loss_and_gradient(minus, data, labels, weights, l2).loss) /
                        (2 * h);
      worst = std::max(worst, rel(fd, lg.grad_weights(k, j)));
    }
    auto plus = model, minus = model;
    plus.bias[k] += h;
    minus.bias[k] -= h;
    const double fd = (vek::loss_and_gradient(plus, data, labels, weights, l2).loss -
                       vek::loss_and_gradient(minus, data, labels, weights, l2).loss) /
                      (2 * h);
    worst = std::max(worst, rel(fd, lg.grad_bias[k]));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(LinearProb, SeparableOneDimensionalData) {
  Matrix data(40, 1);
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < 40; ++i) {
    data(i, 0) = i < 20 ? -1.0 - 0.1 * static_cast<double>(i) : 1.0 + 0.1 * static_cast<double>(i - 20);
    labels[i] = i < 20 ? 0 : 1;
  }
  vek::TrainConfig cfg;
  cfg.seed = 4;
  std::vector<double> trace;
  std::vector<double> ones(40, 1.0);
  const auto model = vek::train_linear_prob(data, labels, ones, cfg, &trace);
  int correct = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    const auto p = vek::predict_proba(model, data.row(i));
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-9);
    correct += vek::predict_class(model, data.row(i)) == labels[i];
  }
  EXPECT_EQ(correct, 40);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]);
}

TEST(LinearProb, DeterministicAndErrors) {
  const auto data = random_matrix(20, 2, 8);
  std::vector<int> labels(20);
  for (std::size_t i = 0; i < 20; ++i) labels[i] = data(i, 0) > 0;
  vek::TrainConfig cfg;
  cfg.epochs = 200;
  const auto a = vek::train_linear_prob(data, labels, cfg);
  const auto b = vek::train_linear_prob(data, labels, cfg);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);

  std::vector<int> single(20, 1);
  expect_errc([&] { vek::train_linear_prob(data, single, cfg); }, Errc::single_class);

  vek::TrainConfig wild = cfg;
  wild.learning_rate = 1e308;
  wild.init_scale = 1e300;
  expect_errc([&] { vek::train_linear_prob(data, labels, wild); }, Errc::non_finite_loss);
}

TEST(KMeans, SingletonClusters) {
  const auto data = Matrix::from_rows({{0, 0}, {5, 5}, {0, 0}, {-3, 2}, {5, 5}});
  const auto r = vek::kmeans(data, 3, 1);
  EXPECT_DOUBLE_EQ(r.inertia, 0.0);
  EXPECT_EQ(r.assignment[0], r.assignment[2]);
  EXPECT_EQ(r.assignment[1], r.assignment[4]);
  EXPECT_NE(r.assignment[0], r.assignment[1]);
  EXPECT_NE(r.assignment[0], r.assignment[3]);
}

TEST(KMeans, SingleClusterIsMean) {
  const auto data = random_matrix(30, 3, 4);
  const auto r = vek::kmeans(data, 1, 9);
  const auto mean = vek::column_means(data);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r.centroids(0, j), mean[j], 1e-12);
}

TEST(KMeans, SeparatedBlobsMatchTrueMeanOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    vek::Rng rng(seed);
    Matrix data(100, 2);
    std::vector<int> blob(100);
    const double means[2][2] = {{0, 0}, {10, 0}};
    for (std::size_t i = 0; i < 100; ++i) {
      blob[i] = static_cast<int>(i % 2);
      data(i, 0) = means[blob[i]][0] + rng.normal();
      data(i, 1) = means[blob[i]][1] + rng.normal();
    }
    const auto r = vek::kmeans(data, 2, seed);
    // oracle: nearest true mean
    for (std::size_t i = 0; i < 100; ++i) {
      const int truth = std::abs(data(i, 0) - 10) < std::abs(data(i, 0)) ? 1 : 0;
      EXPECT_EQ(truth, blob[i]);
      EXPECT_EQ(r.assignment[i] == r.assignment[1], blob[i] == 1);
    }
    for (std::size_t t = 1; t < r.inertia_trace.size(); ++t) EXPECT_LE(r.inertia_trace[t], r.inertia_trace[t - 1] + 1e-12);
  }
}

TEST(KMeans, DeterministicAndRangeChecked) {
  const auto data = random_matrix(60, 3, 12);
  const auto a = vek::kmeans(data, 5, 3);
  const auto b = vek::kmeans(data, 5, 3);
  EXPECT_EQ(a.assignment, b.assignment);
  for (std::size_t t = 1; t < a.inertia_trace.size(); ++t) EXPECT_LE(a.inertia_trace[t], a.inertia_trace[t - 1] + 1e-12);
  expect_errc([&] { vek::kmeans(data, 0, 1); }, Errc::dimension);
  expect_errc([&] { vek::kmeans(data, 61, 1); }, Errc::dimension);
}

TEST(NearestNeighbour, Examples) {
  const auto ref = Matrix::from_rows({{0, 0}, {1, 1}, {5, 5}});
  std::vector<int> labels{7, 8, 9};
  const auto out = vek::nn1_classify(ref, labels, Matrix::from_rows({{1, 1}, {0.5, 0.5}}));
  EXPECT_EQ(out[0], 8);
  EXPECT_EQ(out[1], 7);  // equidistant: lowest reference index

  const auto single = Matrix::from_rows({{3, 3}});
  std::vector<int> one{4};
  for (int l : vek::nn1_classify(single, one, random_matrix(10, 2, 1))) EXPECT_EQ(l, 4);

  std::vector<int> none;
  expect_errc([&] { vek::nn1_classify(Matrix(), none, ref); }, Errc::empty_reference);
}

TEST(NearestNeighbour, MatchesExhaustiveScan) {
  const auto ref = random_matrix(20, 3, 31);
  const auto queries = random_matrix(20, 3, 32);
  std::vector<int> labels(20);
  std::iota(labels.begin(), labels.end(), 100);
  const auto out = vek::nn1_classify(ref, labels, queries);
  for (std::size_t q = 0; q < 20; ++q) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t r = 0; r < 20; ++r) {
      double d = 0;
      for (std::size_t j = 0; j < 3; ++j) d += std::pow(queries(q, j) - ref(r, j), 2);
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    EXPECT_EQ(out[q], labels[best]);
  }
}
