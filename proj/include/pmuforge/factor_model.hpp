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

// Distributions over participation-factor rows. Every model is fitted on an
// n x k matrix (one row per PMU) and samples new k-dimensional rows.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pmuforge/adversarial.hpp"
#include "pmuforge/linalg.hpp"

namespace pmuforge::models {

enum class ModelKind { Copula, Gmm, Adversarial, Replay };

std::string_view kind_name(ModelKind kind);
/// Accepts "copula", "gmm", "gan" (alias "adversarial") and "replay".
ModelKind parse_kind(std::string_view name);

struct CopulaParams {
  std::vector<std::vector<double>> marginals;  // sorted training values per dimension
  std::vector<bool> constant;                  // dimension had a single distinct value
  Matrix correlation;                          // k x k, unit diagonal
};

struct GmmConfig {
  Index components = 2;
  double covariance_floor = 1e-6;
  int max_iterations = 200;
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
};

struct GmmParams {
  GmmConfig config;
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
  // Penalized mean log-likelihood after every EM iteration.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;
};

struct AdversarialConfig {
  int epochs = 500;
  Index batch = 50;
  double lr_gen = 1e-3;
  double lr_disc = 1e-5;
  double l2 = 0.25;
  Index hidden = 16;
  Index noise_dim = 0;  // 0: same as the data dimension
  double mean_weight = 1.0;
  double cov_weight = 1.0;
  double quantile_weight = 1.0;
  std::vector<double> levels;  // empty: default 19 levels
  std::uint64_t seed = 0;
};

struct TrainingPoint {
  int epoch = 0;
  double disc_loss = 0.0;
  double gen_loss = 0.0;
  double feature_loss = 0.0;
};

struct AdversarialParams {
  AdversarialConfig config;
  adversarial::Mlp generator;
  adversarial::Mlp discriminator;
  // Training data are standardized per column; samples are mapped back.
  Vector data_mean;
  Vector data_scale;
  std::vector<TrainingPoint> curve;
};

/// Returns the stored rows in order, cycling. Used as a delta distribution.
struct ReplayParams {
  Matrix rows;
};

struct FactorModel {
  ModelKind kind = ModelKind::Copula;
  Index dim = 0;
  std::string key;  // conditioning context, e.g. "<event_id>/<block>"
  std::variant<std::monostate, CopulaParams, GmmParams, AdversarialParams, ReplayParams> params;

  bool fitted() const { return params.index() != 0; }
};

/// Requires n >= 3. Correlation is estimated on normal scores of average ranks.
FactorModel fit_copula(const Matrix& samples);

/// MAP-EM with a trace penalty that keeps every covariance eigenvalue at or
/// above config.covariance_floor. Requires 1 <= components <= n.
FactorModel fit_gmm(const Matrix& samples, const GmmConfig& config);

/// Alternating discriminator / generator Adam steps. Requires n >= batch.
FactorModel fit_adversarial(const Matrix& samples, const AdversarialConfig& config);

FactorModel replay_model(const Matrix& rows);

/// n x k draws; identical for identical (model, n, seed).
Matrix sample(const FactorModel& model, Index n, std::uint64_t seed);

nlohmann::json to_json(const FactorModel& model);
FactorModel model_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const GmmConfig& config);
GmmConfig gmm_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AdversarialConfig& config);
AdversarialConfig adversarial_config_from_json(const nlohmann::json& doc);

}  // namespace pmuforge::models
