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

// Synthetic events keep the measured signatures verbatim and replace every
// PMU's participation factors with fresh draws from a fitted model:
//   X_synth = P_sampled * S + noise, then standardized.

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "pmuforge/ep.hpp"
#include "pmuforge/factor_model.hpp"

namespace pmuforge::synthesis {

enum class NoiseFamily { Gaussian, None };

std::string_view noise_family_name(NoiseFamily f);
NoiseFamily parse_noise_family(std::string_view name);

struct NoiseModel {
  NoiseFamily family = NoiseFamily::Gaussian;
  double sigma = 0.02;

  void validate() const;
  bool active() const { return family == NoiseFamily::Gaussian && sigma > 0.0; }
};

/// One model per signature block. A block's model covers that block's
/// participation columns of all four channels, concatenated in P, Q, V, F
/// order, so cross-channel dependence is kept.
struct EventModels {
  std::optional<models::FactorModel> inter;
  std::optional<models::FactorModel> intra;

  const std::optional<models::FactorModel>& get(ep::BlockLabel label) const;
};

/// N x K_block factor matrix of `label` across all channels.
Matrix block_factors(const ep::EPDecomposition& decomp, ep::BlockLabel label);

/// Sum over channels of block_rank(label).
Index block_width(const ep::EPDecomposition& decomp, ep::BlockLabel label);

struct ModelSettings {
  models::ModelKind inter = models::ModelKind::Copula;
  models::ModelKind intra = models::ModelKind::Copula;
  models::GmmConfig gmm;
  models::AdversarialConfig adversarial;
};

/// Fits the inter and intra models of one event. Blocks of width zero get
/// no model. The adversarial batch is clamped to the PMU count.
EventModels fit_event_models(const ep::EPDecomposition& decomp, const ModelSettings& settings, std::uint64_t seed);

/// Delta distributions at the measured factors (rows replayed in order).
EventModels replay_models(const ep::EPDecomposition& decomp);

struct RawSynthesis {
  std::array<Matrix, kChannelCount> clean;  // P_sampled * S
  std::array<Matrix, kChannelCount> noise;
  Matrix inter_factors;  // n_pmu x block_width(Inter)
  Matrix intra_factors;
};

/// Unstandardized synthesis. Throws ValidationError when a model's
/// dimensionality differs from the block width or a needed model is missing.
RawSynthesis synthesize_raw(const ep::EPDecomposition& decomp, const EventModels& models, Index n_pmu,
                            const NoiseModel& noise, std::uint64_t seed);

/// synthesize_raw, clean + noise, standardized. Label, start index and
/// sample interval are copied from the source; PMU ids are reused when
/// n_pmu matches the source and numbered otherwise.
EventTensor synthesize_event(const ep::EPDecomposition& decomp, const EventModels& models, Index n_pmu,
                             const NoiseModel& noise, std::uint64_t seed);

struct SynthesisConfig {
  ep::Ranks ranks;
  ModelSettings models;
  NoiseModel noise;
  std::uint64_t master_seed = 1;
  Index n_pmu = 0;  // 0: follow the source event
};

struct EventProvenance {
  std::string source_event_id;
  std::array<Index, kChannelCount> k_inter{};
  std::array<Index, kChannelCount> k_intra{};
  std::string inter_model;
  std::string intra_model;
  std::uint64_t fit_seed = 0;
  std::uint64_t sample_seed = 0;
  // Smallest Euclidean distance between a sampled and a measured factor row.
  double min_factor_distance = 0.0;
};

struct SyntheticDataset {
  Dataset dataset;  // provenance Synthetic
  std::vector<EventProvenance> records;
  SynthesisConfig config;

  nlohmann::json provenance_json() const;
};

/// Decomposes, fits and synthesizes every event. Per-event seeds derive from
/// config.master_seed and the event position. Errors name the event.
SyntheticDataset generate_dataset(const Dataset& measured, const SynthesisConfig& config);

/// Same, from existing decompositions. When `fitted` is given (parallel to
/// `decomps`) those models are used instead of fitting new ones.
SyntheticDataset generate_from_decompositions(const std::vector<ep::EPDecomposition>& decomps,
                                              const SynthesisConfig& config,
                                              const std::vector<EventModels>* fitted = nullptr);

/// Dataset files plus provenance.json carrying the per-event records.
void export_synthetic(const SyntheticDataset& synth, const std::filesystem::path& root);

/// min over (i, j) of ||a_i - b_j||; +inf when either is empty.
double min_row_distance(const Matrix& a, const Matrix& b);

nlohmann::json to_json(const NoiseModel& noise);
NoiseModel noise_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ModelSettings& settings);
ModelSettings model_settings_from_json(const nlohmann::json& doc);

}  // namespace pmuforge::synthesis
