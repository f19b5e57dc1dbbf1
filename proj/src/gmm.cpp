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
#include <cmath>
#include <limits>
#include <numbers>

#include "model_detail.hpp"
#include "pmuforge/errors.hpp"

namespace pmuforge::models {

namespace {

using Dense = Eigen::MatrixXd;
using Col = Eigen::VectorXd;

constexpr double kMinWeight = 1e-8;

struct Component {
  Eigen::LLT<Dense> llt;
  double log_norm = 0.0;  // -0.5 (k log 2pi + log det)
};

Component prepare(const Matrix& cov) {
  Component c;
  c.llt.compute(Dense(cov));
  if (c.llt.info() != Eigen::Success) throw Error("fit_gmm: covariance lost positive definiteness");
  const Dense& l = c.llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  c.log_norm = -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) + logdet);
  return c;
}

double log_density(const Component& c, const Col& diff) {
  const Col y = c.llt.matrixL().solve(diff);
  return c.log_norm - 0.5 * y.squaredNorm();
}

Matrix global_covariance(const Matrix& x) {
  const Col mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - mean.transpose();
  return (centered.transpose() * centered) / static_cast<double>(x.rows());
}

// k-means++: first centre uniform, then proportional to squared distance.
std::vector<Col> seed_means(const Matrix& x, Index m, Rng& rng) {
  const Index n = x.rows();
  std::vector<Col> means;
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  auto pick = [&](Index i) {
    taken[static_cast<std::size_t>(i)] = true;
    means.push_back(x.row(i).transpose());
    for (Index r = 0; r < n; ++r) {
      d2[static_cast<std::size_t>(r)] =
          std::min(d2[static_cast<std::size_t>(r)], (x.row(r).transpose() - means.back()).squaredNorm());
    }
  };
  pick(std::min<Index>(static_cast<Index>(uniform_open(rng) * static_cast<double>(n)), n - 1));
  while (static_cast<Index>(means.size()) < m) {
    double total = 0.0;
    for (Index r = 0; r < n; ++r) {
      if (!taken[static_cast<std::size_t>(r)]) total += d2[static_cast<std::size_t>(r)];
    }
    Index chosen = -1;
    if (total > 0.0) {
      double target = uniform_open(rng) * total;
      for (Index r = 0; r < n; ++r) {
        if (taken[static_cast<std::size_t>(r)]) continue;
        chosen = r;
        target -= d2[static_cast<std::size_t>(r)];
        if (target <= 0.0 && d2[static_cast<std::size_t>(r)] > 0.0) break;
      }
    } else {
      // duplicates only: uniform over the remaining rows
      std::vector<Index> free;
      for (Index r = 0; r < n; ++r) {
        if (!taken[static_cast<std::size_t>(r)]) free.push_back(r);
      }
      const auto j = std::min(free.size() - 1, static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(free.size())));
      chosen = free[j];
    }
    pick(chosen);
  }
  return means;
}

// Row with the largest distance to its nearest current mean.
Index farthest_row(const Matrix& x, const std::vector<Col>& means, std::size_t skip) {
  Index best = 0;
  double best_d = -1.0;
  for (Index r = 0; r < x.rows(); ++r) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < means.size(); ++j) {
      if (j == skip) continue;
      d = std::min(d, (x.row(r).transpose() - means[j]).squaredNorm());
    }
    if (d > best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

}  // namespace

namespace detail {

Matrix sample_gmm(const GmmParams& p, Index n, Rng& rng) {
  const Index m = p.weights.size();
  const Index k = p.means.front().size();
  std::vector<Dense> chol;
  for (const auto& c : p.covariances) chol.emplace_back(Eigen::LLT<Dense>(Dense(c)).matrixL());
  Matrix out(n, k);
  Col g(k);
  for (Index i = 0; i < n; ++i) {
    const double u = uniform_open(rng);
    Index j = 0;
    double acc = p.weights[0];
    while (j + 1 < m && u > acc) acc += p.weights[++j];
    for (Index d = 0; d < k; ++d) g[d] = standard_normal(rng);
    out.row(i) = (p.means[static_cast<std::size_t>(j)] + chol[static_cast<std::size_t>(j)] * g).transpose();
  }
  return out;
}

}  // namespace detail

FactorModel fit_gmm(const Matrix& samples, const GmmConfig& config) {
  detail::check_samples(samples, "fit_gmm");
  const Index n = samples.rows();
  const Index k = samples.cols();
  const Index m = config.components;
  if (m < 1) throw ValidationError("fit_gmm: need at least one component");
  if (m > n) {
    throw ValidationError("fit_gmm: " + std::to_string(m) + " components exceed " + std::to_string(n) + " samples");
  }
  if (!(config.covariance_floor > 0.0)) throw ValidationError("fit_gmm: covariance floor must be positive");
  if (config.max_iterations < 0) throw ValidationError("fit_gmm: max_iterations must be non-negative");

  Rng rng(config.seed);
  GmmParams p;
  p.config = config;
  p.weights = Col::Constant(m, 1.0 / static_cast<double>(m));
  p.means = seed_means(samples, m, rng);
  const Matrix init_cov = global_covariance(samples) + config.covariance_floor * Matrix::Identity(k, k);
  p.covariances.assign(static_cast<std::size_t>(m), init_cov);

  // MAP penalty -alpha/2 * sum_j tr(Sigma_j^-1) gives Sigma_j = S_j + alpha/n_j I.
  const double alpha = config.covariance_floor * static_cast<double>(n);
  const double nd = static_cast<double>(n);
  Matrix resp(n, m);
  Col logp(m);

  auto objective = [&](const std::vector<Component>& comps, bool fill) {
    double ll = 0.0;
    for (Index i = 0; i < n; ++i) {
      const Col xi = samples.row(i).transpose();
      for (Index j = 0; j < m; ++j) {
        logp[j] = std::log(p.weights[j]) + log_density(comps[static_cast<std::size_t>(j)], xi - p.means[static_cast<std::size_t>(j)]);
      }
      const double mx = logp.maxCoeff();
      const double lse = mx + std::log((logp.array() - mx).exp().sum());
      ll += lse;
      if (fill) resp.row(i) = (logp.array() - lse).exp().matrix().transpose();
    }
    double penalty = 0.0;
    for (const auto& c : comps) penalty += c.llt.solve(Dense::Identity(k, k)).trace();
    return (ll - 0.5 * alpha * penalty) / nd;
  };

  std::vector<Component> comps;
  for (const auto& c : p.covariances) comps.push_back(prepare(c));
  double current = objective(comps, true);
  if (!std::isfinite(current)) throw Error("fit_gmm: initial log-likelihood is not finite");

  for (int it = 0; it < config.max_iterations; ++it) {
    // M-step
    const Col nk = resp.colwise().sum().transpose();
    Index degenerate = -1;
    for (Index j = 0; j < m; ++j) {
      if (nk[j] / nd < kMinWeight) {
        degenerate = j;
        break;
      }
    }
    if (degenerate >= 0) {
      if (p.reseeds > 0) {
        throw Error("fit_gmm: component " + std::to_string(degenerate) + " collapsed again after re-seeding");
      }
      ++p.reseeds;
      p.means[static_cast<std::size_t>(degenerate)] =
          samples.row(farthest_row(samples, p.means, static_cast<std::size_t>(degenerate))).transpose();
      p.covariances[static_cast<std::size_t>(degenerate)] = init_cov;
      p.weights = Col::Constant(m, 1.0 / static_cast<double>(m));
      comps.clear();
      for (const auto& c : p.covariances) comps.push_back(prepare(c));
      current = objective(comps, true);
      p.log_likelihood_trace.clear();  // monotonicity restarts from the new state
      continue;
    }
    for (Index j = 0; j < m; ++j) {
      const auto js = static_cast<std::size_t>(j);
      p.weights[j] = nk[j] / nd;
      Col mean = (samples.transpose() * resp.col(j)) / nk[j];
      const Matrix centered = samples.rowwise() - mean.transpose();
      Matrix cov = (centered.transpose() * resp.col(j).asDiagonal() * centered) / nk[j];
      cov = 0.5 * (cov + cov.transpose()).eval();
      cov.diagonal().array() += alpha / nk[j];
      p.means[js] = std::move(mean);
      p.covariances[js] = std::move(cov);
    }
    p.weights /= p.weights.sum();
    comps.clear();
    for (const auto& c : p.covariances) comps.push_back(prepare(c));
    const double next = objective(comps, true);
    if (!std::isfinite(next)) throw Error("fit_gmm: log-likelihood became non-finite at iteration " + std::to_string(it));
    p.log_likelihood_trace.push_back(next);
    p.iterations = it + 1;
    const double gain = next - current;
    current = next;
    if (std::abs(gain) < config.tolerance) {
      p.converged = true;
      break;
    }
  }

  FactorModel model;
  model.kind = ModelKind::Gmm;
  model.dim = k;
  model.params = std::move(p);
  return model;
}

}  // namespace pmuforge::models
