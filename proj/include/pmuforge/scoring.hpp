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

// Train-on-one, test-on-the-other scoring of synthetic data with a small
// voltage-vs-frequency event classifier.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "pmuforge/pqvf.hpp"

namespace pmuforge::scoring {

inline constexpr Index kFeaturesPerChannel = 8;
inline constexpr Index kFeatureCount = kFeaturesPerChannel * static_cast<Index>(kChannelCount);

/// Per channel: min, max, range, time of extremum (fraction of the window),
/// post minus pre event mean, post-event slope, mean cross-PMU dispersion and
/// band-passed RMS. Per-PMU statistics are averaged over PMUs. Masked
/// samples are ignored; degenerate inputs give zeros.
Vector extract_features(const EventTensor& event);

/// Rows follow dataset.events.
Matrix feature_matrix(const Dataset& dataset);

struct TrainConfig {
  int epochs = 200;
  Index batch = 50;
  double learning_rate = 1e-3;
  double voltage_weight = 1.0 / 7.0;
  double frequency_weight = 1.0;
  std::uint64_t seed = 0;
  bool holdout = false;         // cross_score: evaluate on a held-out fraction
  double holdout_fraction = 0.25;
};

struct Classifier {
  Vector feature_mean;
  Vector feature_scale;
  Vector weights;  // on standardized features
  double bias = 0.0;
  std::vector<double> loss_curve;  // weighted mean training loss after each epoch

  double decision(const Vector& features) const;
  /// true = Frequency.
  bool predict(const Vector& features) const { return decision(features) > 0.0; }
};

/// Logistic regression trained with Adam on weighted binary cross-entropy.
/// Throws ValidationError when the dataset holds only one class.
Classifier train_classifier(const Dataset& dataset, const TrainConfig& config);

/// Lower-level entry point on precomputed features; labels are 1 for
/// Frequency. `weights` are per-example loss weights.
Classifier train_logistic(const Matrix& features, const std::vector<int>& labels, const std::vector<double>& weights,
                          const TrainConfig& config);

struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;

  /// Derives the rates from the confusion counts. F_beta is 0 when
  /// precision or recall is undefined or both are 0.
  static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
};

double f_beta(std::size_t tp, std::size_t fp, std::size_t fn, double beta);

/// Frequency is the positive class. Throws for an empty dataset.
Metrics evaluate(const Classifier& classifier, const Dataset& dataset);

Metrics metrics_from_predictions(const std::vector<bool>& predicted, const std::vector<bool>& actual);

enum class Scenario { SynSyn, SynMeas, MeasMeas, MeasSyn };

std::string_view scenario_name(Scenario s);

struct CrossScoreTable {
  std::array<Metrics, 4> rows;  // indexed by Scenario

  const Metrics& at(Scenario s) const { return rows[static_cast<std::size_t>(s)]; }
  /// Self accuracy minus cross accuracy for the model trained on each dataset.
  double synthetic_gap() const;
  double measured_gap() const;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Trains on each dataset and evaluates on both. With config.holdout each
/// dataset is split once (seeded) and both evaluations use the held-out part.
CrossScoreTable cross_score(const Dataset& synth, const Dataset& measured, const TrainConfig& config);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

}  // namespace pmuforge::scoring
