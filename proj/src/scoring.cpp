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

#include "pmuforge/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmuforge/errors.hpp"
#include "pmuforge/io.hpp"
#include "pmuforge/parallel.hpp"
#include "pmuforge/rng.hpp"

namespace pmuforge::scoring {

using nlohmann::json;

namespace {

constexpr Index kSmoothingWindow = 15;

// Order-independent mean: sorting first makes the sum identical for any
// permutation of the inputs.
double sorted_mean(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct RowStats {
  double min = 0.0, max = 0.0, t_ext = 0.0, diff = 0.0, slope = 0.0, bp_rms = 0.0;
  bool valid = false;
};

RowStats row_stats(const double* x, Index n, Index e) {
  RowStats st;
  double best = -1.0;
  double pre = 0.0, post = 0.0;
  Index npre = 0, npost = 0;
  for (Index t = 0; t < n; ++t) {
    if (std::isnan(x[t])) continue;
    if (!st.valid) {
      st.min = st.max = x[t];
      st.valid = true;
    }
    st.min = std::min(st.min, x[t]);
    st.max = std::max(st.max, x[t]);
    if (std::abs(x[t]) > best) {
      best = std::abs(x[t]);
      st.t_ext = static_cast<double>(t) / static_cast<double>(n);
    }
    if (t < e) {
      pre += x[t];
      ++npre;
    } else {
      post += x[t];
      ++npost;
    }
  }
  if (!st.valid) return st;
  if (npre > 0 && npost > 0) st.diff = post / static_cast<double>(npost) - pre / static_cast<double>(npre);

  // least-squares slope after the event, in units per post-event window
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, m = 0.0;
  for (Index t = std::max<Index>(e, 0); t < n; ++t) {
    if (std::isnan(x[t])) continue;
    const double u = static_cast<double>(t - e);
    sx += u;
    sy += x[t];
    sxx += u * u;
    sxy += u * x[t];
    m += 1.0;
  }
  const double den = m * sxx - sx * sx;
  if (m >= 2.0 && den > 0.0) st.slope = (m * sxy - sx * sy) / den * static_cast<double>(n - e);

  // RMS of x minus its centred moving average
  double acc = 0.0;
  Index cnt = 0;
  const Index half = kSmoothingWindow / 2;
  for (Index t = 0; t < n; ++t) {
    if (std::isnan(x[t])) continue;
    double s = 0.0;
    Index k = 0;
    for (Index u = std::max<Index>(0, t - half); u <= std::min(n - 1, t + half); ++u) {
      if (std::isnan(x[u])) continue;
      s += x[u];
      ++k;
    }
    const double r = x[t] - s / static_cast<double>(k);
    acc += r * r;
    ++cnt;
  }
  if (cnt > 0) st.bp_rms = std::sqrt(acc / static_cast<double>(cnt));
  return st;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log p + (1 - y) log(1 - p)] from the logit, without overflow
double bce(double z, int y) {
  const double sp = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));  // log(1 + e^z)
  return y == 1 ? sp - z : sp;
}

std::vector<int> labels_of(const Dataset& d) {
  std::vector<int> y;
  for (const auto& e : d.events) y.push_back(e.label.cls == EventClass::Frequency ? 1 : 0);
  return y;
}

std::vector<double> weights_of(const std::vector<int>& y, const TrainConfig& c) {
  std::vector<double> w;
  for (const int v : y) w.push_back(v == 1 ? c.frequency_weight : c.voltage_weight);
  return w;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.provenance = d.provenance;
  for (const auto i : idx) out.events.push_back(d.events[i]);
  return out;
}

// Seeded split keeping the class ratio: the last `fraction` of each class
// (after shuffling) is held out.
std::pair<Dataset, Dataset> split(const Dataset& d, double fraction, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> train, test;
  for (const EventClass cls : {EventClass::Voltage, EventClass::Frequency}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d.events.size(); ++i) {
      if (d.events[i].label.cls == cls) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    const std::size_t cut = idx.size() - std::min(n_test, idx.size() > 0 ? idx.size() - 1 : 0);
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {subset(d, train), subset(d, test)};
}

}  // namespace

Vector extract_features(const EventTensor& event) {
  Vector f = Vector::Zero(kFeatureCount);
  const Index n = event.n_samples();
  const Index np = event.n_pmu();
  if (n == 0 || np == 0) return f;
  const Index e = std::clamp<Index>(event.event_start_index, 0, n);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const Matrix& x = event.data[c];
    std::array<std::vector<double>, 6> per;
    std::vector<double> bp;
    for (Index r = 0; r < np; ++r) {
      const RowStats st = row_stats(x.data() + r * n, n, e);
      if (!st.valid) continue;
      per[0].push_back(st.min);
      per[1].push_back(st.max);
      per[2].push_back(st.max - st.min);
      per[3].push_back(st.t_ext);
      per[4].push_back(st.diff);
      per[5].push_back(st.slope);
      bp.push_back(st.bp_rms);
    }
    std::vector<double> disp;
    std::vector<double> col;
    for (Index t = 0; t < n; ++t) {
      col.clear();
      for (Index r = 0; r < np; ++r) {
        if (!std::isnan(x(r, t))) col.push_back(x(r, t));
      }
      if (col.empty()) continue;
      const double mean = sorted_mean(col);
      std::vector<double> dev;
      for (const double v : col) dev.push_back((v - mean) * (v - mean));
      disp.push_back(std::sqrt(sorted_mean(dev)));
    }
    const Index base = static_cast<Index>(c) * kFeaturesPerChannel;
    for (Index j = 0; j < 6; ++j) f[base + j] = sorted_mean(per[static_cast<std::size_t>(j)]);
    f[base + 6] = disp.empty() ? 0.0 : std::accumulate(disp.begin(), disp.end(), 0.0) / static_cast<double>(disp.size());
    f[base + 7] = sorted_mean(bp);
  }
  return f;
}

Matrix feature_matrix(const Dataset& dataset) {
  Matrix out(static_cast<Index>(dataset.events.size()), kFeatureCount);
  parallel_for(dataset.events.size(), [&](std::size_t i) {
    out.row(static_cast<Index>(i)) = extract_features(dataset.events[i]).transpose();
  });
  return out;
}

double Classifier::decision(const Vector& features) const {
  const Vector z = (features - feature_mean).cwiseQuotient(feature_scale);
  return weights.dot(z) + bias;
}

Classifier train_logistic(const Matrix& features, const std::vector<int>& labels, const std::vector<double>& weights,
                          const TrainConfig& config) {
  const Index n = features.rows();
  const Index d = features.cols();
  if (n == 0) throw ValidationError("train_classifier: empty training set");
  if (static_cast<Index>(labels.size()) != n || static_cast<Index>(weights.size()) != n) {
    throw ValidationError("train_classifier: label/weight count mismatch");
  }
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_pos || !has_neg) throw ValidationError("train_classifier: training data contain a single class");
  if (config.batch < 1) throw ValidationError("train_classifier: batch must be positive");
  if (config.epochs < 0) throw ValidationError("train_classifier: epochs must be non-negative");

  Classifier clf;
  clf.feature_mean = features.colwise().mean().transpose();
  clf.feature_scale = Vector::Ones(d);
  for (Index j = 0; j < d; ++j) {
    const double var = (features.col(j).array() - clf.feature_mean[j]).square().mean();
    if (var > 1e-24) clf.feature_scale[j] = std::sqrt(var);
  }
  const Matrix z = (features.rowwise() - clf.feature_mean.transpose()).array().rowwise() /
                   clf.feature_scale.transpose().array();
  clf.weights = Vector::Zero(d);

  // Adam over [weights | bias]
  Vector theta = Vector::Zero(d + 1), m = Vector::Zero(d + 1), v = Vector::Zero(d + 1);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long long step = 0;
  Rng rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  auto full_loss = [&]() {
    double loss = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double logit = z.row(i).dot(theta.head(d)) + theta[d];
      loss += weights[static_cast<std::size_t>(i)] * bce(logit, labels[static_cast<std::size_t>(i)]);
    }
    return loss / static_cast<double>(n);
  };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < n; start += config.batch) {
      const Index end = std::min(n, start + config.batch);
      Vector g = Vector::Zero(d + 1);
      for (Index k = start; k < end; ++k) {
        const Index i = order[static_cast<std::size_t>(k)];
        const double logit = z.row(i).dot(theta.head(d)) + theta[d];
        const double r = weights[static_cast<std::size_t>(i)] * (sigmoid(logit) - labels[static_cast<std::size_t>(i)]);
        g.head(d) += r * z.row(i).transpose();
        g[d] += r;
      }
      g /= static_cast<double>(end - start);
      ++step;
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      theta.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
    clf.loss_curve.push_back(full_loss());
  }
  clf.weights = theta.head(d);
  clf.bias = theta[d];
  return clf;
}

Classifier train_classifier(const Dataset& dataset, const TrainConfig& config) {
  const std::vector<int> y = labels_of(dataset);
  return train_logistic(feature_matrix(dataset), y, weights_of(y, config), config);
}

double f_beta(std::size_t tp, std::size_t fp, std::size_t fn, double beta) {
  if (tp + fp == 0 || tp + fn == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double b2 = beta * beta;
  const double den = b2 * p + r;
  return den > 0.0 ? (1.0 + b2) * p * r / den : 0.0;
}

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  const std::size_t total = tp + fp + fn + tn;
  m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  m.f1 = f_beta(tp, fp, fn, 1.0);
  m.f2 = f_beta(tp, fp, fn, 2.0);
  return m;
}

Metrics metrics_from_predictions(const std::vector<bool>& predicted, const std::vector<bool>& actual) {
  if (predicted.size() != actual.size()) throw ValidationError("metrics: prediction count mismatch");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && actual[i]) ++tp;
    else if (predicted[i]) ++fp;
    else if (actual[i]) ++fn;
    else ++tn;
  }
  return Metrics::from_counts(tp, fp, fn, tn);
}

Metrics evaluate(const Classifier& classifier, const Dataset& dataset) {
  if (dataset.events.empty()) throw ValidationError("evaluate: empty dataset");
  const Matrix f = feature_matrix(dataset);
  std::vector<bool> pred, actual;
  for (Index i = 0; i < f.rows(); ++i) {
    pred.push_back(classifier.predict(f.row(i).transpose()));
    actual.push_back(dataset.events[static_cast<std::size_t>(i)].label.cls == EventClass::Frequency);
  }
  return metrics_from_predictions(pred, actual);
}

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::SynSyn: return "Syn-Syn";
    case Scenario::SynMeas: return "Syn-Meas";
    case Scenario::MeasMeas: return "Meas-Meas";
    case Scenario::MeasSyn: return "Meas-Syn";
  }
  return "?";
}

double CrossScoreTable::synthetic_gap() const { return at(Scenario::SynSyn).accuracy - at(Scenario::SynMeas).accuracy; }
double CrossScoreTable::measured_gap() const {
  return at(Scenario::MeasMeas).accuracy - at(Scenario::MeasSyn).accuracy;
}

std::string CrossScoreTable::to_csv() const {
  std::string out = "scenario,accuracy,f1,f2,tp,fp,fn,tn\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Metrics& m = rows[i];
    out += std::string(scenario_name(static_cast<Scenario>(i))) + "," + io::format_double(m.accuracy) + "," +
           io::format_double(m.f1) + "," + io::format_double(m.f2) + "," + std::to_string(m.tp) + "," +
           std::to_string(m.fp) + "," + std::to_string(m.fn) + "," + std::to_string(m.tn) + "\n";
  }
  return out;
}

json CrossScoreTable::to_json() const {
  json scen = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Metrics& m = rows[i];
    scen.push_back(json{{"scenario", scenario_name(static_cast<Scenario>(i))},
                        {"accuracy", m.accuracy},
                        {"f1", m.f1},
                        {"f2", m.f2},
                        {"tp", m.tp},
                        {"fp", m.fp},
                        {"fn", m.fn},
                        {"tn", m.tn}});
  }
  return json{{"scenarios", std::move(scen)},
              {"synthetic_self_minus_cross_accuracy", synthetic_gap()},
              {"measured_self_minus_cross_accuracy", measured_gap()}};
}

CrossScoreTable cross_score(const Dataset& synth, const Dataset& measured, const TrainConfig& config) {
  Dataset syn_train = synth, syn_test = synth, meas_train = measured, meas_test = measured;
  if (config.holdout) {
    if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0)) {
      throw ValidationError("cross_score: holdout_fraction must lie in (0, 1)");
    }
    std::tie(syn_train, syn_test) = split(synth, config.holdout_fraction, derive_seed(config.seed, "holdout-syn"));
    std::tie(meas_train, meas_test) = split(measured, config.holdout_fraction, derive_seed(config.seed, "holdout-meas"));
  }
  const Classifier on_syn = train_classifier(syn_train, config);
  const Classifier on_meas = train_classifier(meas_train, config);
  CrossScoreTable t;
  t.rows[static_cast<std::size_t>(Scenario::SynSyn)] = evaluate(on_syn, syn_test);
  t.rows[static_cast<std::size_t>(Scenario::SynMeas)] = evaluate(on_syn, meas_test);
  t.rows[static_cast<std::size_t>(Scenario::MeasMeas)] = evaluate(on_meas, meas_test);
  t.rows[static_cast<std::size_t>(Scenario::MeasSyn)] = evaluate(on_meas, syn_test);
  return t;
}

json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch", c.batch},
              {"learning_rate", c.learning_rate},
              {"voltage_weight", c.voltage_weight},
              {"frequency_weight", c.frequency_weight},
              {"seed", c.seed},
              {"holdout", c.holdout},
              {"holdout_fraction", c.holdout_fraction}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig c;
  c.epochs = doc.value("epochs", c.epochs);
  c.batch = doc.value("batch", c.batch);
  c.learning_rate = doc.value("learning_rate", c.learning_rate);
  c.voltage_weight = doc.value("voltage_weight", c.voltage_weight);
  c.frequency_weight = doc.value("frequency_weight", c.frequency_weight);
  c.seed = doc.value("seed", c.seed);
  c.holdout = doc.value("holdout", c.holdout);
  c.holdout_fraction = doc.value("holdout_fraction", c.holdout_fraction);
  return c;
}

}  // namespace pmuforge::scoring
