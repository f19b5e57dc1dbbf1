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

#pragma once

// Small fully-connected generator/discriminator pair with hand-written
// backpropagation. Both nets are one tanh hidden layer followed by a linear
// output; parameters live in one flat vector so the optimizer and the
// finite-difference checks can treat them uniformly.

#include <cstdint>
#include <vector>

#include "pmuforge/linalg.hpp"
#include "pmuforge/rng.hpp"

namespace pmuforge::adversarial {

struct Mlp {
  Index inputs = 0;
  Index hidden = 0;
  Index outputs = 0;
  // [W1 (hidden x inputs, row-major) | b1 (hidden) | W2 (outputs x hidden) | b2 (outputs)]
  Vector params;

  static Mlp create(Index inputs, Index hidden, Index outputs);
  static Index parameter_count(Index inputs, Index hidden, Index outputs);

  /// Weights ~ N(0, 1/fan_in), biases zero.
  void initialize(Rng& rng);

  /// Sum of squared weights (biases excluded).
  double weight_norm_sq() const;

  /// Rows of `in` are samples. `hidden_out` receives tanh activations.
  Matrix forward(const Matrix& in, Matrix* hidden_out = nullptr) const;

  /// Parameter gradient for upstream gradient `d_out`; `d_in` optionally
  /// receives the input gradient.
  Vector backward(const Matrix& in, const Matrix& hidden_act, const Matrix& d_out, Matrix* d_in = nullptr) const;

  /// 2 * W in weight slots, zero on biases.
  Vector weight_norm_gradient() const;
};

struct LossSettings {
  double l2 = 0.25;
  double mean_weight = 1.0;
  double cov_weight = 1.0;
  double quantile_weight = 1.0;
  std::vector<double> levels;
};

struct GeneratorLossParts {
  double adversarial = 0.0;
  double mean = 0.0;
  double covariance = 0.0;
  double quantile = 0.0;
  double l2 = 0.0;

  double feature() const { return mean + covariance + quantile; }
  double total() const { return adversarial + feature() + l2; }
};

/// Standard discriminator cross-entropy on real/fake batches plus the l2
/// weight penalty. `grad` receives d/d(discriminator params).
double discriminator_loss(const Mlp& disc, const Matrix& real, const Matrix& fake, double l2, Vector* grad);

/// Non-saturating generator loss -log D(G(z)) plus mean, covariance and
/// quantile feature matching against `real` and the l2 penalty.
GeneratorLossParts generator_loss(const Mlp& gen, const Mlp& disc, const Matrix& noise, const Matrix& real,
                                  const LossSettings& settings, Vector* grad);

/// Adam with the usual bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  Adam() = default;
  Adam(Index size, double learning_rate);
  void step(Vector& params, const Vector& grad);

 private:
  double lr_ = 1e-3;
  Vector m_;
  Vector v_;
  long long t_ = 0;
};

}  // namespace pmuforge::adversarial
