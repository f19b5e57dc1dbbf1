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

#include <cmath>

#include "pmuforge/adversarial.hpp"
#include "pmuforge/errors.hpp"
#include "pmuforge/factor_model.hpp"
#include "pmuforge/quantile.hpp"
#include "test_util.hpp"

namespace pmuforge {
namespace {

using adversarial::Mlp;
using testing::random_matrix;

double relative_error(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1e-12, b.norm()); }

template <class F>
Vector finite_difference(Vector& params, F&& loss) {
  const double h = 1e-6;
  Vector g(params.size());
  for (Index i = 0; i < params.size(); ++i) {
    const double keep = params(i);
    params(i) = keep + h;
    const double up = loss();
    params(i) = keep - h;
    const double dn = loss();
    params(i) = keep;
    g(i) = (up - dn) / (2 * h);
  }
  return g;
}

TEST(Mlp, ParameterLayout) {
  EXPECT_EQ(Mlp::parameter_count(2, 1, 1), 5);
  EXPECT_EQ(Mlp::parameter_count(3, 4, 2), 3 * 4 + 4 + 4 * 2 + 2);
  Mlp m = Mlp::create(2, 1, 1);
  m.params << 0.5, -1.0, 0.1, 2.0, 0.3;
  Matrix in(1, 2);
  in << 1.0, 2.0;
  const Matrix out = m.forward(in);
  EXPECT_NEAR(out(0, 0), 2.0 * std::tanh(0.5 - 2.0 + 0.1) + 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(m.weight_norm_sq(), 0.25 + 1.0 + 4.0);
}

TEST(Gradients, DiscriminatorLossOnFiveWeightNet) {
  Rng rng(1);
  Mlp disc = Mlp::create(2, 1, 1);
  disc.initialize(rng);
  disc.params(2) = 0.2;
  const Matrix real = random_matrix(9, 2, rng);
  const Matrix fake = random_matrix(9, 2, rng);
  Vector grad;
  discriminator_loss(disc, real, fake, 0.25, &grad);
  const Vector fd = finite_difference(disc.params, [&] { return discriminator_loss(disc, real, fake, 0.25, nullptr); });
  EXPECT_LT(relative_error(grad, fd), 1e-4);
}

TEST(Gradients, GeneratorTotalLossOnFiveWeightNets) {
  Rng rng(2);
  Mlp gen = Mlp::create(2, 1, 1);   // 5 weights
  Mlp disc = Mlp::create(1, 1, 1);  // 4 weights
  gen.initialize(rng);
  disc.initialize(rng);
  gen.params(2) = -0.3;
  const Matrix noise = random_matrix(13, 2, rng);
  const Matrix real = random_matrix(17, 1, rng);
  adversarial::LossSettings s;
  s.levels = default_quantile_levels();
  Vector grad;
  const auto parts = generator_loss(gen, disc, noise, real, s, &grad);
  EXPECT_GT(parts.quantile, 0.0);
  EXPECT_GT(parts.l2, 0.0);
  const Vector fd = finite_difference(gen.params, [&] { return generator_loss(gen, disc, noise, real, s, nullptr).total(); });
  EXPECT_LT(relative_error(grad, fd), 1e-4);
}

TEST(Gradients, WiderNetworksAgree) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(10 + seed);
    Mlp gen = Mlp::create(3, 5, 2);
    Mlp disc = Mlp::create(2, 4, 1);
    gen.initialize(rng);
    disc.initialize(rng);
    for (Index i = 0; i < disc.params.size(); ++i) disc.params(i) += 0.1 * standard_normal(rng);
    const Matrix noise = random_matrix(21, 3, rng);
    const Matrix real = random_matrix(21, 2, rng);
    adversarial::LossSettings s;
    s.levels = default_quantile_levels();
    Vector grad;
    generator_loss(gen, disc, noise, real, s, &grad);
    EXPECT_LT(relative_error(grad, finite_difference(gen.params, [&] {
                return generator_loss(gen, disc, noise, real, s, nullptr).total();
              })),
              1e-4);
    discriminator_loss(disc, real, gen.forward(noise), 0.25, &grad);
    const Matrix fake = gen.forward(noise);
    EXPECT_LT(relative_error(grad, finite_difference(disc.params, [&] {
                return discriminator_loss(disc, real, fake, 0.25, nullptr);
              })),
              1e-4);
  }
}

TEST(Gradients, InputGradient) {
  Rng rng(3);
  Mlp m = Mlp::create(3, 4, 2);
  m.initialize(rng);
  Matrix in = random_matrix(5, 3, rng);
  const Matrix d_out = random_matrix(5, 2, rng);
  Matrix hidden;
  m.forward(in, &hidden);
  Matrix d_in;
  m.backward(in, hidden, d_out, &d_in);
  const double h = 1e-6;
  for (Index i = 0; i < in.size(); ++i) {
    Matrix up = in, dn = in;
    up.data()[i] += h;
    dn.data()[i] -= h;
    const double fd = ((m.forward(up) - m.forward(dn)).cwiseProduct(d_out)).sum() / (2 * h);
    EXPECT_NEAR(d_in.data()[i], fd, 1e-7);
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  adversarial::Adam opt(2, 0.1);
  Vector p(2);
  p << 1.0, -1.0;
  Vector g(2);
  g << 3.0, -0.5;
  opt.step(p, g);
  EXPECT_NEAR(p(0), 0.9, 1e-6);
  EXPECT_NEAR(p(1), -0.9, 1e-6);
}

TEST(Training, OneDimensionalGaussianTarget) {
  Rng rng(4);
  const Index n = 2000;
  Matrix x(n, 1);
  for (Index i = 0; i < n; ++i) x(i, 0) = 1.5 + 0.8 * standard_normal(rng);
  models::AdversarialConfig cfg;
  cfg.seed = 9;
  const models::FactorModel m = models::fit_adversarial(x, cfg);
  const auto& p = std::get<models::AdversarialParams>(m.params);
  EXPECT_EQ(p.curve.size(), 500u);
  const Matrix s = models::sample(m, n, 1);
  const double mean = s.mean();
  const double sd = std::sqrt((s.array() - mean).square().mean());
  EXPECT_NEAR(mean, 1.5, 0.1);
  EXPECT_NEAR(sd, 0.8, 0.15);
}

TEST(Training, ZeroEpochsIsDeterministicPushforward) {
  Rng rng(5);
  const Matrix x = random_matrix(60, 2, rng);
  models::AdversarialConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 3;
  const auto a = models::fit_adversarial(x, cfg);
  const auto b = models::fit_adversarial(x, cfg);
  EXPECT_TRUE(std::get<models::AdversarialParams>(a.params).curve.empty());
  EXPECT_EQ(models::sample(a, 40, 2), models::sample(b, 40, 2));
  EXPECT_EQ(models::to_json(a), models::to_json(b));
}

TEST(Training, NonFiniteLossAbortsWithEpoch) {
  Rng rng(6);
  const Matrix x = random_matrix(60, 1, rng);
  models::AdversarialConfig cfg;
  cfg.epochs = 20;
  cfg.lr_gen = 1e200;
  cfg.lr_disc = 1e200;
  try {
    models::fit_adversarial(x, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("last finite"), std::string::npos) << msg;
  }
}

TEST(Training, BatchLargerThanDataRejected) {
  models::AdversarialConfig cfg;
  EXPECT_THROW(models::fit_adversarial(Matrix::Zero(10, 1), cfg), ValidationError);
}

}  // namespace
}  // namespace pmuforge
