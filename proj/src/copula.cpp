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

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

#include "model_detail.hpp"
#include "pmuforge/errors.hpp"
#include "pmuforge/quantile.hpp"

namespace pmuforge::models {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

// Normal scores Phi^-1(rank / (n + 1)) with ties sharing their average rank.
Vector normal_scores(const Matrix& x, Index col) {
  const Index n = x.rows();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return x(a, col) < x(b, col); });
  Vector z(n);
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && x(idx[static_cast<std::size_t>(j + 1)], col) == x(idx[static_cast<std::size_t>(i)], col)) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    const double u = rank / static_cast<double>(n + 1);
    const double s = boost::math::quantile(kStdNormal, u);
    for (Index t = i; t <= j; ++t) z[idx[static_cast<std::size_t>(t)]] = s;
    i = j + 1;
  }
  return z;
}

}  // namespace

namespace detail {

void check_samples(const Matrix& samples, const char* who) {
  if (samples.cols() < 1) throw ValidationError(std::string(who) + ": samples have no columns");
  if (!samples.allFinite()) throw ValidationError(std::string(who) + ": samples contain non-finite values");
}

Matrix sample_copula(const CopulaParams& p, Index n, Rng& rng) {
  const Index k = p.correlation.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(p.correlation));
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd a = eig.eigenvectors() * lambda.asDiagonal();
  Matrix out(n, k);
  Eigen::VectorXd g(k);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < k; ++d) g[d] = standard_normal(rng);
    const Eigen::VectorXd z = a * g;
    for (Index d = 0; d < k; ++d) {
      const auto& m = p.marginals[static_cast<std::size_t>(d)];
      if (p.constant[static_cast<std::size_t>(d)]) {
        out(i, d) = m.front();
        continue;
      }
      const double u = boost::math::cdf(kStdNormal, z[d]);
      out(i, d) = empirical_quantile(m, u);
    }
  }
  return out;
}

}  // namespace detail

FactorModel fit_copula(const Matrix& samples) {
  detail::check_samples(samples, "fit_copula");
  if (samples.rows() < 3) throw ValidationError("fit_copula: need at least 3 samples");
  const Index n = samples.rows();
  const Index k = samples.cols();

  CopulaParams p;
  p.marginals.resize(static_cast<std::size_t>(k));
  p.constant.assign(static_cast<std::size_t>(k), false);
  Matrix scores(n, k);
  for (Index d = 0; d < k; ++d) {
    auto& m = p.marginals[static_cast<std::size_t>(d)];
    m.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = samples(i, d);
    std::sort(m.begin(), m.end());
    p.constant[static_cast<std::size_t>(d)] = m.front() == m.back();
    scores.col(d) = normal_scores(samples, d);
  }

  Matrix cov = (scores.transpose() * scores) / static_cast<double>(n);
  p.correlation = Matrix::Identity(k, k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = a + 1; b < k; ++b) {
      if (p.constant[static_cast<std::size_t>(a)] || p.constant[static_cast<std::size_t>(b)]) continue;
      const double r = std::clamp(cov(a, b) / std::sqrt(cov(a, a) * cov(b, b)), -1.0, 1.0);
      p.correlation(a, b) = r;
      p.correlation(b, a) = r;
    }
  }

  FactorModel model;
  model.kind = ModelKind::Copula;
  model.dim = k;
  model.params = std::move(p);
  return model;
}

}  // namespace pmuforge::models
