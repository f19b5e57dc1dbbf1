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

#include "pmuforge/adversarial.hpp"

#include <cmath>

#include "pmuforge/errors.hpp"
#include "pmuforge/quantile.hpp"

namespace pmuforge::adversarial {

namespace {

struct Layout {
  Index w1, b1, w2, b2, total;
};

Layout layout(Index in, Index hid, Index out) {
  Layout l{};
  l.w1 = 0;
  l.b1 = hid * in;
  l.w2 = l.b1 + hid;
  l.b2 = l.w2 + out * hid;
  l.total = l.b2 + out;
  return l;
}

using MapC = Eigen::Map<const Matrix>;
using Map = Eigen::Map<Matrix>;

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector column_mean(const Matrix& x) { return x.colwise().mean().transpose(); }

// population covariance
Matrix covariance(const Matrix& x, const Vector& mean) {
  const Matrix c = x.rowwise() - mean.transpose();
  return (c.transpose() * c) / static_cast<double>(x.rows());
}

}  // namespace

Index Mlp::parameter_count(Index inputs, Index hidden, Index outputs) {
  return layout(inputs, hidden, outputs).total;
}

Mlp Mlp::create(Index inputs, Index hidden, Index outputs) {
  if (inputs < 1 || hidden < 1 || outputs < 1) throw ValidationError("Mlp: layer sizes must be positive");
  Mlp m;
  m.inputs = inputs;
  m.hidden = hidden;
  m.outputs = outputs;
  m.params = Vector::Zero(parameter_count(inputs, hidden, outputs));
  return m;
}

void Mlp::initialize(Rng& rng) {
  const Layout l = layout(inputs, hidden, outputs);
  params.setZero();
  const double s1 = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Index i = l.w1; i < l.b1; ++i) params[i] = s1 * standard_normal(rng);
  for (Index i = l.w2; i < l.b2; ++i) params[i] = s2 * standard_normal(rng);
}

double Mlp::weight_norm_sq() const {
  const Layout l = layout(inputs, hidden, outputs);
  return params.segment(l.w1, l.b1 - l.w1).squaredNorm() + params.segment(l.w2, l.b2 - l.w2).squaredNorm();
}

Vector Mlp::weight_norm_gradient() const {
  const Layout l = layout(inputs, hidden, outputs);
  Vector g = Vector::Zero(params.size());
  g.segment(l.w1, l.b1 - l.w1) = 2.0 * params.segment(l.w1, l.b1 - l.w1);
  g.segment(l.w2, l.b2 - l.w2) = 2.0 * params.segment(l.w2, l.b2 - l.w2);
  return g;
}

Matrix Mlp::forward(const Matrix& in, Matrix* hidden_out) const {
  if (in.cols() != inputs) throw ValidationError("Mlp::forward: input width mismatch");
  const Layout l = layout(inputs, hidden, outputs);
  const MapC w1(params.data() + l.w1, hidden, inputs);
  const MapC w2(params.data() + l.w2, outputs, hidden);
  const auto b1 = params.segment(l.b1, hidden);
  const auto b2 = params.segment(l.b2, outputs);
  Matrix h = (in * w1.transpose()).rowwise() + b1.transpose();
  h = h.array().tanh().matrix();
  Matrix out = (h * w2.transpose()).rowwise() + b2.transpose();
  if (hidden_out != nullptr) *hidden_out = std::move(h);
  return out;
}

Vector Mlp::backward(const Matrix& in, const Matrix& hidden_act, const Matrix& d_out, Matrix* d_in) const {
  const Layout l = layout(inputs, hidden, outputs);
  const MapC w1(params.data() + l.w1, hidden, inputs);
  const MapC w2(params.data() + l.w2, outputs, hidden);
  Vector g = Vector::Zero(params.size());
  Map gw1(g.data() + l.w1, hidden, inputs);
  Map gw2(g.data() + l.w2, outputs, hidden);
  gw2 = d_out.transpose() * hidden_act;
  g.segment(l.b2, outputs) = d_out.colwise().sum().transpose();
  const Matrix d_h = d_out * w2;
  const Matrix d_pre = d_h.array() * (1.0 - hidden_act.array().square());
  gw1 = d_pre.transpose() * in;
  g.segment(l.b1, hidden) = d_pre.colwise().sum().transpose();
  if (d_in != nullptr) *d_in = d_pre * w1;
  return g;
}

double discriminator_loss(const Mlp& disc, const Matrix& real, const Matrix& fake, double l2, Vector* grad) {
  if (real.rows() < 1 || fake.rows() < 1) throw ValidationError("discriminator_loss: empty batch");
  Matrix h_r, h_f;
  const Matrix lr = disc.forward(real, &h_r);
  const Matrix lf = disc.forward(fake, &h_f);
  const double nr = static_cast<double>(real.rows());
  const double nf = static_cast<double>(fake.rows());
  double loss = 0.0;
  Matrix d_r(lr.rows(), 1), d_f(lf.rows(), 1);
  // -log sigma(l) = softplus(-l); -log(1 - sigma(l)) = softplus(l)
  for (Index i = 0; i < lr.rows(); ++i) {
    loss += softplus(-lr(i, 0)) / nr;
    d_r(i, 0) = -sigmoid(-lr(i, 0)) / nr;
  }
  for (Index i = 0; i < lf.rows(); ++i) {
    loss += softplus(lf(i, 0)) / nf;
    d_f(i, 0) = sigmoid(lf(i, 0)) / nf;
  }
  loss += l2 * disc.weight_norm_sq();
  if (grad != nullptr) {
    *grad = disc.backward(real, h_r, d_r) + disc.backward(fake, h_f, d_f) + l2 * disc.weight_norm_gradient();
  }
  return loss;
}

GeneratorLossParts generator_loss(const Mlp& gen, const Mlp& disc, const Matrix& noise, const Matrix& real,
                                  const LossSettings& settings, Vector* grad) {
  if (noise.rows() < 1 || real.rows() < 1) throw ValidationError("generator_loss: empty batch");
  if (gen.outputs != real.cols() || disc.inputs != real.cols()) {
    throw ValidationError("generator_loss: network widths do not match the data");
  }
  const std::vector<double> levels = settings.levels.empty() ? default_quantile_levels() : settings.levels;
  Matrix h_g;
  const Matrix fake = gen.forward(noise, &h_g);
  const Index b = fake.rows();
  const double bd = static_cast<double>(b);

  GeneratorLossParts parts;
  Matrix d_fake = Matrix::Zero(b, fake.cols());

  Matrix h_d;
  const Matrix logits = disc.forward(fake, &h_d);
  Matrix d_logit(b, 1);
  for (Index i = 0; i < b; ++i) {
    parts.adversarial += softplus(-logits(i, 0)) / bd;
    d_logit(i, 0) = -sigmoid(-logits(i, 0)) / bd;
  }
  Matrix d_from_disc;
  disc.backward(fake, h_d, d_logit, &d_from_disc);
  d_fake += d_from_disc;

  const Vector m_f = column_mean(fake);
  const Vector m_r = column_mean(real);
  const Vector dm = m_f - m_r;
  parts.mean = settings.mean_weight * dm.squaredNorm();
  d_fake.rowwise() += (settings.mean_weight * 2.0 / bd) * dm.transpose();

  const Matrix c_f = covariance(fake, m_f);
  const Matrix c_r = covariance(real, m_r);
  const Matrix dc = c_f - c_r;
  parts.covariance = settings.cov_weight * dc.squaredNorm();
  const Matrix centered = fake.rowwise() - m_f.transpose();
  d_fake += (settings.cov_weight * 4.0 / bd) * (centered * dc);  // dc symmetric

  Matrix d_q;
  parts.quantile = settings.quantile_weight * quantile_loss(real, fake, levels, &d_q);
  d_fake += settings.quantile_weight * d_q;

  parts.l2 = settings.l2 * gen.weight_norm_sq();
  if (grad != nullptr) *grad = gen.backward(noise, h_g, d_fake) + settings.l2 * gen.weight_norm_gradient();
  return parts;
}

Adam::Adam(Index size, double learning_rate)
    : lr_(learning_rate), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& grad) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++t_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
}

}  // namespace pmuforge::adversarial
