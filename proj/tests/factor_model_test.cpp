// Copyright 2026 The pmuforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pmuforge/errors.hpp"
#include "pmuforge/factor_model.hpp"
#include "pmuforge/quantile.hpp"
#include "test_util.hpp"

namespace pmuforge {
namespace {

using namespace models;
using testing::random_matrix;

std::vector<double> sorted_column(const Matrix& m, Index j) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, j);
  std::sort(v.begin(), v.end());
  return v;
}

const CopulaParams& copula(const FactorModel& m) { return std::get<CopulaParams>(m.params); }
const GmmParams& gmm(const FactorModel& m) { return std::get<GmmParams>(m.params); }

TEST(Copula, ThreePointMarginal) {
  Matrix x(3, 1);
  x << 3, 1, 2;
  const FactorModel m = fit_copula(x);
  const Matrix s = sample(m, 20000, 7);
  EXPECT_GE(s.minCoeff(), 1.0);
  EXPECT_LE(s.maxCoeff(), 3.0);
  const auto v = sorted_column(s, 0);
  EXPECT_NEAR(empirical_quantile(v, 0.5), 2.0, 0.02);
}

TEST(Copula, IndependentDimensions) {
  Rng rng(1);
  const Index n = 2000;
  const Matrix x = random_matrix(n, 3, rng);
  const FactorModel m = fit_copula(x);
  const Matrix& r = copula(m).correlation;
  for (Index a = 0; a < 3; ++a) {
    EXPECT_DOUBLE_EQ(r(a, a), 1.0);
    for (Index b = 0; b < 3; ++b) {
      EXPECT_EQ(r(a, b), r(b, a));
      if (a != b) EXPECT_LT(std::abs(r(a, b)), 4.0 / std::sqrt(static_cast<double>(n)));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
}

TEST(Copula, ComonotonePair) {
  Rng rng(2);
  Matrix x(500, 2);
  for (Index i = 0; i < 500; ++i) {
    x(i, 0) = standard_normal(rng);
    x(i, 1) = std::exp(x(i, 0));
  }
  const FactorModel m = fit_copula(x);
  EXPECT_GE(copula(m).correlation(0, 1), 0.99);
  const Matrix s = sample(m, 2000, 3);
  double agree = 0.0;
  for (Index i = 0; i < s.rows(); ++i) {
    for (Index j = i + 1; j < std::min<Index>(s.rows(), i + 20); ++j) {
      agree += ((s(i, 0) - s(j, 0)) * (s(i, 1) - s(j, 1)) >= 0.0) ? 1.0 : 0.0;
    }
  }
  EXPECT_GT(agree / (2000.0 * 19.0), 0.9);
}

TEST(Copula, QuantileFidelityAtTenThousand) {
  Rng rng(3);
  Matrix x(300, 2);
  for (Index i = 0; i < 300; ++i) {
    x(i, 0) = standard_normal(rng);
    x(i, 1) = 0.5 * x(i, 0) + uniform_open(rng) * 2.0;
  }
  const FactorModel m = fit_copula(x);
  const Matrix s = sample(m, 10000, 4);
  for (Index j = 0; j < 2; ++j) {
    const auto train = sorted_column(x, j);
    const auto draw = sorted_column(s, j);
    EXPECT_GE(draw.front(), train.front());
    EXPECT_LE(draw.back(), train.back());
    for (const double l : default_quantile_levels()) {
      EXPECT_LE(std::abs(empirical_quantile(train, l) - empirical_quantile(draw, l)), 0.05) << "dim " << j << " level " << l;
    }
  }
}

TEST(Copula, ConstantDimension) {
  Rng rng(4);
  Matrix x = random_matrix(50, 2, rng);
  x.col(1).setConstant(2.5);
  const FactorModel m = fit_copula(x);
  EXPECT_TRUE(copula(m).constant[1]);
  EXPECT_EQ(copula(m).correlation(0, 1), 0.0);
  const Matrix s = sample(m, 100, 1);
  EXPECT_TRUE((s.col(1).array() == 2.5).all());
}

TEST(Copula, TooFewSamples) {
  EXPECT_THROW(fit_copula(Matrix::Zero(2, 1)), ValidationError);
  Matrix bad = Matrix::Zero(4, 1);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(fit_copula(bad), ValidationError);
}

TEST(Gmm, SingleComponentClosedForm) {
  Rng rng(5);
  const Matrix x = random_matrix(40, 3, rng);
  GmmConfig cfg;
  cfg.components = 1;
  const FactorModel m = fit_gmm(x, cfg);
  const GmmParams& p = gmm(m);
  const Vector mean = x.colwise().mean().transpose();
  const Matrix c = x.rowwise() - mean.transpose();
  const Matrix cov = c.transpose() * c / 40.0 + 1e-6 * Matrix::Identity(3, 3);
  EXPECT_LT((p.means[0] - mean).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((p.covariances[0] - cov).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(p.weights.sum(), 1.0, 1e-12);
}

TEST(Gmm, TwoClustersRecovered) {
  Rng rng(6);
  Matrix x(400, 1);
  for (Index i = 0; i < 400; ++i) x(i, 0) = (i % 2 == 0 ? -5.0 : 5.0) + 0.1 * standard_normal(rng);
  GmmConfig cfg;
  cfg.seed = 3;
  const FactorModel fitted = fit_gmm(x, cfg);
  const GmmParams& p = gmm(fitted);
  std::vector<double> means{p.means[0](0), p.means[1](0)};
  std::sort(means.begin(), means.end());
  EXPECT_NEAR(means[0], -5.0, 0.1);
  EXPECT_NEAR(means[1], 5.0, 0.1);
  EXPECT_NEAR(p.weights(0), 0.5, 0.01);
}

TEST(Gmm, ComponentPerSampleStaysFinite) {
  Rng rng(7);
  const Matrix x = random_matrix(6, 2, rng);
  GmmConfig cfg;
  cfg.components = 6;
  const FactorModel fitted = fit_gmm(x, cfg);
  const GmmParams& p = gmm(fitted);
  ASSERT_FALSE(p.log_likelihood_trace.empty());
  for (const double ll : p.log_likelihood_trace) EXPECT_TRUE(std::isfinite(ll));
  for (const auto& c : p.covariances) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    EXPECT_GE(eig.eigenvalues().minCoeff(), cfg.covariance_floor * (1 - 1e-9));
  }
  cfg.components = 7;
  EXPECT_THROW(fit_gmm(x, cfg), ValidationError);
  cfg.components = 0;
  EXPECT_THROW(fit_gmm(x, cfg), ValidationError);
}

TEST(Gmm, EmIsMonotoneOnRandomSeeds) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Rng rng(seed);
    Matrix x = random_matrix(120, 2, rng);
    for (Index i = 0; i < 40; ++i) x.row(i).array() += 3.0;
    GmmConfig cfg;
    cfg.components = 1 + static_cast<Index>(seed % 4);
    cfg.seed = seed;
    const FactorModel fitted = fit_gmm(x, cfg);
  const GmmParams& p = gmm(fitted);
    for (std::size_t i = 1; i < p.log_likelihood_trace.size(); ++i) {
      EXPECT_GE(p.log_likelihood_trace[i] - p.log_likelihood_trace[i - 1], -1e-9) << "seed " << seed << " iter " << i;
    }
    EXPECT_NEAR(p.weights.sum(), 1.0, 1e-12);
  }
}

TEST(Gmm, FloorOnlyCovarianceSampling) {
  Matrix x = Matrix::Zero(10, 2);
  GmmConfig cfg;
  cfg.components = 1;
  cfg.covariance_floor = 0.04;
  const FactorModel m = fit_gmm(x, cfg);
  const Index n = 20000;
  const Matrix s = sample(m, n, 9);
  const Matrix cov = s.transpose() * s / static_cast<double>(n);
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(cov(0, 0), 0.04, tol * 0.04 * std::sqrt(2.0));
  EXPECT_NEAR(cov(1, 1), 0.04, tol * 0.04 * std::sqrt(2.0));
  EXPECT_NEAR(cov(0, 1), 0.0, tol * 0.04);
}

TEST(Models, JsonRoundTripIsBitExact) {
  Rng rng(8);
  const Matrix x = random_matrix(60, 2, rng);
  GmmConfig g;
  g.seed = 4;
  AdversarialConfig a;
  a.epochs = 3;
  a.batch = 20;
  a.seed = 5;
  for (const FactorModel& m : {fit_copula(x), fit_gmm(x, g), fit_adversarial(x, a), replay_model(x)}) {
    const nlohmann::json doc = to_json(m);
    const FactorModel back = model_from_json(nlohmann::json::parse(doc.dump()));
    EXPECT_EQ(back.kind, m.kind);
    EXPECT_EQ(back.dim, m.dim);
    EXPECT_EQ(to_json(back), doc);
    EXPECT_EQ(sample(back, 50, 1), sample(m, 50, 1));
  }
}

TEST(Models, SamplingIsDeterministic) {
  Rng rng(9);
  const Matrix x = random_matrix(60, 3, rng);
  for (const FactorModel& m : {fit_copula(x), fit_gmm(x, GmmConfig{})}) {
    EXPECT_EQ(sample(m, 100, 42), sample(m, 100, 42));
    EXPECT_NE(sample(m, 100, 42), sample(m, 100, 43));
    EXPECT_EQ(sample(m, 100, 42).cols(), 3);
  }
  GmmConfig g;
  g.seed = 11;
  EXPECT_EQ(to_json(fit_gmm(x, g)), to_json(fit_gmm(x, g)));
}

TEST(Models, ReplayCycles) {
  Matrix x(2, 1);
  x << 1, 2;
  const Matrix s = sample(replay_model(x), 5, 0);
  EXPECT_EQ(s(0, 0), 1);
  EXPECT_EQ(s(1, 0), 2);
  EXPECT_EQ(s(4, 0), 1);
}

TEST(Models, UnfittedAndNames) {
  FactorModel m;
  EXPECT_THROW(sample(m, 3, 1), ValidationError);
  EXPECT_THROW(to_json(m), ValidationError);
  EXPECT_EQ(parse_kind("adversarial"), ModelKind::Adversarial);
  EXPECT_EQ(parse_kind(kind_name(ModelKind::Gmm)), ModelKind::Gmm);
  EXPECT_THROW(parse_kind("vae"), ValidationError);
  EXPECT_THROW(model_from_json(nlohmann::json{{"kind", "copula"}}), ValidationError);
}

TEST(Models, AdversarialDefaultsMatchTrainingRecipe) {
  const AdversarialConfig c;
  EXPECT_EQ(c.epochs, 500);
  EXPECT_EQ(c.batch, 50);
  EXPECT_EQ(c.lr_gen, 1e-3);
  EXPECT_EQ(c.lr_disc, 1e-5);
  EXPECT_EQ(c.l2, 0.25);
  const GmmConfig g;
  EXPECT_EQ(g.covariance_floor, 1e-6);
  EXPECT_EQ(g.max_iterations, 200);
  EXPECT_EQ(g.tolerance, 1e-8);
}

}  // namespace
}  // namespace pmuforge
