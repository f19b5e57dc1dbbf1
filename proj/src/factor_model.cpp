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

#include "pmuforge/factor_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "model_detail.hpp"
#include "pmuforge/errors.hpp"
#include "pmuforge/quantile.hpp"

namespace pmuforge::models {

using nlohmann::json;

std::string_view kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Copula: return "copula";
    case ModelKind::Gmm: return "gmm";
    case ModelKind::Adversarial: return "gan";
    case ModelKind::Replay: return "replay";
  }
  return "?";
}

ModelKind parse_kind(std::string_view name) {
  if (name == "copula") return ModelKind::Copula;
  if (name == "gmm") return ModelKind::Gmm;
  if (name == "gan" || name == "adversarial") return ModelKind::Adversarial;
  if (name == "replay") return ModelKind::Replay;
  throw ValidationError("unknown factor model '" + std::string(name) + "' (expected copula, gmm or gan)");
}

namespace {

Matrix standard_noise(Index n, Index d, Rng& rng) {
  Matrix z(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) z(i, j) = standard_normal(rng);
  }
  return z;
}

}  // namespace

namespace detail {

Matrix sample_adversarial(const AdversarialParams& p, Index n, Rng& rng) {
  const Matrix z = standard_noise(n, p.generator.inputs, rng);
  Matrix out = p.generator.forward(z);
  for (Index d = 0; d < out.cols(); ++d) out.col(d) = out.col(d).array() * p.data_scale[d] + p.data_mean[d];
  return out;
}

}  // namespace detail

FactorModel fit_adversarial(const Matrix& samples, const AdversarialConfig& config) {
  detail::check_samples(samples, "fit_adversarial");
  const Index n = samples.rows();
  const Index k = samples.cols();
  if (config.batch < 1) throw ValidationError("fit_adversarial: batch must be positive");
  if (n < config.batch) {
    throw ValidationError("fit_adversarial: " + std::to_string(n) + " samples are fewer than the batch size " +
                          std::to_string(config.batch));
  }
  if (config.epochs < 0) throw ValidationError("fit_adversarial: epochs must be non-negative");

  AdversarialParams p;
  p.config = config;
  p.data_mean = samples.colwise().mean().transpose();
  p.data_scale = Vector::Ones(k);
  for (Index d = 0; d < k; ++d) {
    const double var = (samples.col(d).array() - p.data_mean[d]).square().mean();
    if (var > 0.0) p.data_scale[d] = std::sqrt(var);
  }
  Matrix data(n, k);
  for (Index d = 0; d < k; ++d) data.col(d) = (samples.col(d).array() - p.data_mean[d]) / p.data_scale[d];

  const Index noise_dim = config.noise_dim > 0 ? config.noise_dim : k;
  Rng rng(config.seed);
  p.generator = adversarial::Mlp::create(noise_dim, config.hidden, k);
  p.discriminator = adversarial::Mlp::create(k, config.hidden, 1);
  p.generator.initialize(rng);
  p.discriminator.initialize(rng);

  adversarial::LossSettings settings;
  settings.l2 = config.l2;
  settings.mean_weight = config.mean_weight;
  settings.cov_weight = config.cov_weight;
  settings.quantile_weight = config.quantile_weight;
  settings.levels = config.levels.empty() ? default_quantile_levels() : config.levels;

  adversarial::Adam opt_g(p.generator.params.size(), config.lr_gen);
  adversarial::Adam opt_d(p.discriminator.params.size(), config.lr_disc);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const Index batches = n / config.batch;
  TrainingPoint last{};
  Matrix real(config.batch, k);
  Vector grad;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    TrainingPoint point{epoch, 0.0, 0.0, 0.0};
    for (Index b = 0; b < batches; ++b) {
      for (Index i = 0; i < config.batch; ++i) real.row(i) = data.row(order[static_cast<std::size_t>(b * config.batch + i)]);
      const Matrix noise = standard_noise(config.batch, noise_dim, rng);
      const Matrix fake = p.generator.forward(noise);
      const double dl = adversarial::discriminator_loss(p.discriminator, real, fake, config.l2, &grad);
      opt_d.step(p.discriminator.params, grad);
      const adversarial::GeneratorLossParts gl =
          adversarial::generator_loss(p.generator, p.discriminator, noise, real, settings, &grad);
      opt_g.step(p.generator.params, grad);
      point.disc_loss += dl;
      point.gen_loss += gl.total();
      point.feature_loss += gl.feature();
    }
    const double nb = static_cast<double>(batches);
    point.disc_loss /= nb;
    point.gen_loss /= nb;
    point.feature_loss /= nb;
    if (!std::isfinite(point.disc_loss) || !std::isfinite(point.gen_loss) || !p.generator.params.allFinite() ||
        !p.discriminator.params.allFinite()) {
      std::ostringstream msg;
      msg << "fit_adversarial: non-finite loss at epoch " << epoch << " (last finite: disc " << last.disc_loss
          << ", gen " << last.gen_loss << ")";
      throw Error(msg.str());
    }
    last = point;
    p.curve.push_back(point);
  }

  FactorModel model;
  model.kind = ModelKind::Adversarial;
  model.dim = k;
  model.params = std::move(p);
  return model;
}

FactorModel replay_model(const Matrix& rows) {
  if (rows.rows() < 1 || rows.cols() < 1) throw ValidationError("replay_model: empty factor matrix");
  FactorModel model;
  model.kind = ModelKind::Replay;
  model.dim = rows.cols();
  model.params = ReplayParams{rows};
  return model;
}

Matrix sample(const FactorModel& model, Index n, std::uint64_t seed) {
  if (!model.fitted()) throw ValidationError("sample: model is not fitted");
  if (n < 0) throw ValidationError("sample: negative sample count");
  Rng rng(seed);
  Matrix out;
  if (const auto* c = std::get_if<CopulaParams>(&model.params)) {
    out = detail::sample_copula(*c, n, rng);
  } else if (const auto* g = std::get_if<GmmParams>(&model.params)) {
    out = detail::sample_gmm(*g, n, rng);
  } else if (const auto* a = std::get_if<AdversarialParams>(&model.params)) {
    out = detail::sample_adversarial(*a, n, rng);
  } else {
    const auto& r = std::get<ReplayParams>(model.params).rows;
    out.resize(n, r.cols());
    for (Index i = 0; i < n; ++i) out.row(i) = r.row(i % r.rows());
  }
  if (out.cols() != model.dim) throw Error("sample: model produced the wrong dimensionality");
  return out;
}

// ---- serialization

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix matrix_from(const json& doc) {
  const Index r = doc.at("rows").get<Index>();
  const Index c = doc.at("cols").get<Index>();
  const json& data = doc.at("data");
  if (static_cast<Index>(data.size()) != r) throw ValidationError("model json: matrix row count mismatch");
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i) {
    const json& row = data.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != c) throw ValidationError("model json: matrix column count mismatch");
    for (Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& doc) {
  const auto v = doc.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json mlp_json(const adversarial::Mlp& m) {
  return json{{"inputs", m.inputs}, {"hidden", m.hidden}, {"outputs", m.outputs}, {"params", vector_json(m.params)}};
}

adversarial::Mlp mlp_from(const json& doc) {
  auto m = adversarial::Mlp::create(doc.at("inputs").get<Index>(), doc.at("hidden").get<Index>(),
                                    doc.at("outputs").get<Index>());
  Vector params = vector_from(doc.at("params"));
  if (params.size() != m.params.size()) throw ValidationError("model json: network parameter count mismatch");
  m.params = std::move(params);
  return m;
}

}  // namespace

json to_json(const GmmConfig& c) {
  return json{{"components", c.components},
              {"covariance_floor", c.covariance_floor},
              {"max_iterations", c.max_iterations},
              {"tolerance", c.tolerance},
              {"seed", c.seed}};
}

GmmConfig gmm_config_from_json(const json& doc) {
  GmmConfig c;
  c.components = doc.value("components", c.components);
  c.covariance_floor = doc.value("covariance_floor", c.covariance_floor);
  c.max_iterations = doc.value("max_iterations", c.max_iterations);
  c.tolerance = doc.value("tolerance", c.tolerance);
  c.seed = doc.value("seed", c.seed);
  return c;
}

json to_json(const AdversarialConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch", c.batch},
              {"lr_gen", c.lr_gen},
              {"lr_disc", c.lr_disc},
              {"l2", c.l2},
              {"hidden", c.hidden},
              {"noise_dim", c.noise_dim},
              {"mean_weight", c.mean_weight},
              {"cov_weight", c.cov_weight},
              {"quantile_weight", c.quantile_weight},
              {"levels", c.levels},
              {"seed", c.seed}};
}

AdversarialConfig adversarial_config_from_json(const json& doc) {
  AdversarialConfig c;
  c.epochs = doc.value("epochs", c.epochs);
  c.batch = doc.value("batch", c.batch);
  c.lr_gen = doc.value("lr_gen", c.lr_gen);
  c.lr_disc = doc.value("lr_disc", c.lr_disc);
  c.l2 = doc.value("l2", c.l2);
  c.hidden = doc.value("hidden", c.hidden);
  c.noise_dim = doc.value("noise_dim", c.noise_dim);
  c.mean_weight = doc.value("mean_weight", c.mean_weight);
  c.cov_weight = doc.value("cov_weight", c.cov_weight);
  c.quantile_weight = doc.value("quantile_weight", c.quantile_weight);
  c.levels = doc.value("levels", c.levels);
  c.seed = doc.value("seed", c.seed);
  return c;
}

json to_json(const FactorModel& model) {
  if (!model.fitted()) throw ValidationError("to_json: model is not fitted");
  json doc{{"variant", kind_name(model.kind)}, {"dim", model.dim}, {"key", model.key}};
  json params;
  if (const auto* c = std::get_if<CopulaParams>(&model.params)) {
    params["marginals"] = c->marginals;
    params["constant"] = c->constant;
    params["correlation"] = matrix_json(c->correlation);
  } else if (const auto* g = std::get_if<GmmParams>(&model.params)) {
    params["config"] = to_json(g->config);
    params["weights"] = vector_json(g->weights);
    json means = json::array();
    json covs = json::array();
    for (const auto& m : g->means) means.push_back(vector_json(m));
    for (const auto& c : g->covariances) covs.push_back(matrix_json(c));
    params["means"] = std::move(means);
    params["covariances"] = std::move(covs);
    params["log_likelihood_trace"] = g->log_likelihood_trace;
    params["iterations"] = g->iterations;
    params["converged"] = g->converged;
    params["reseeds"] = g->reseeds;
  } else if (const auto* a = std::get_if<AdversarialParams>(&model.params)) {
    params["config"] = to_json(a->config);
    params["generator"] = mlp_json(a->generator);
    params["discriminator"] = mlp_json(a->discriminator);
    params["data_mean"] = vector_json(a->data_mean);
    params["data_scale"] = vector_json(a->data_scale);
    json curve = json::array();
    for (const auto& p : a->curve) {
      curve.push_back(json{{"epoch", p.epoch}, {"disc_loss", p.disc_loss}, {"gen_loss", p.gen_loss},
                           {"feature_loss", p.feature_loss}});
    }
    params["training_curve"] = std::move(curve);
  } else {
    params["rows"] = matrix_json(std::get<ReplayParams>(model.params).rows);
  }
  doc["params"] = std::move(params);
  return doc;
}

FactorModel model_from_json(const json& doc) {
  try {
    FactorModel model;
    model.kind = parse_kind(doc.at("variant").get<std::string>());
    model.dim = doc.at("dim").get<Index>();
    model.key = doc.value("key", std::string{});
    const json& p = doc.at("params");
    switch (model.kind) {
      case ModelKind::Copula: {
        CopulaParams c;
        c.marginals = p.at("marginals").get<std::vector<std::vector<double>>>();
        c.constant = p.at("constant").get<std::vector<bool>>();
        c.correlation = matrix_from(p.at("correlation"));
        if (static_cast<Index>(c.marginals.size()) != model.dim || c.correlation.rows() != model.dim) {
          throw ValidationError("model json: copula dimensionality mismatch");
        }
        model.params = std::move(c);
        break;
      }
      case ModelKind::Gmm: {
        GmmParams g;
        g.config = gmm_config_from_json(p.at("config"));
        g.weights = vector_from(p.at("weights"));
        for (const auto& m : p.at("means")) g.means.push_back(vector_from(m));
        for (const auto& c : p.at("covariances")) g.covariances.push_back(matrix_from(c));
        g.log_likelihood_trace = p.value("log_likelihood_trace", std::vector<double>{});
        g.iterations = p.value("iterations", 0);
        g.converged = p.value("converged", false);
        g.reseeds = p.value("reseeds", 0);
        if (g.means.empty() || static_cast<Index>(g.means.size()) != g.weights.size() ||
            g.covariances.size() != g.means.size()) {
          throw ValidationError("model json: inconsistent mixture components");
        }
        model.params = std::move(g);
        break;
      }
      case ModelKind::Adversarial: {
        AdversarialParams a;
        a.config = adversarial_config_from_json(p.at("config"));
        a.generator = mlp_from(p.at("generator"));
        a.discriminator = mlp_from(p.at("discriminator"));
        a.data_mean = vector_from(p.at("data_mean"));
        a.data_scale = vector_from(p.at("data_scale"));
        for (const auto& t : p.at("training_curve")) {
          a.curve.push_back(TrainingPoint{t.at("epoch").get<int>(), t.at("disc_loss").get<double>(),
                                          t.at("gen_loss").get<double>(), t.at("feature_loss").get<double>()});
        }
        if (a.generator.outputs != model.dim) throw ValidationError("model json: generator width mismatch");
        model.params = std::move(a);
        break;
      }
      case ModelKind::Replay:
        model.params = ReplayParams{matrix_from(p.at("rows"))};
        break;
    }
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model json: ") + e.what());
  }
}

}  // namespace pmuforge::models
