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

// Planted-truth event generator. Each planted event channel is
// X = P * S + noise with S a set of orthonormal, zero-mean signature rows
// and P drawn from known factor distributions, so recovery and fidelity
// claims downstream can be checked against exact answers.

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "pmuforge/pqvf.hpp"
#include "pmuforge/rng.hpp"

namespace pmuforge::toy {

enum class SignatureKind { Step, DampedSinusoid, Ramp, Composite };

std::string_view kind_name(SignatureKind kind);
SignatureKind parse_kind(std::string_view name);

struct SignatureParams {
  Index onset = 300;           // first sample of the event response
  double frequency = 0.025;    // cycles per sample (damped sinusoid)
  double damping = 0.0;        // per-sample exponential decay rate
  Index ramp_duration = 90;    // samples to reach the full ramp level
  double recovery_tau = 0.0;   // composite: step decay time constant; 0 keeps the step
  double step_level = 1.0;     // composite step weight
  double ramp_level = 0.0;     // composite ramp weight
};

/// Unnormalized response value at (possibly fractional) sample `t`.
double signature_value(SignatureKind kind, double t, const SignatureParams& params);

/// Unit-norm signature of length `length`. Throws ValidationError for
/// length < 2 or an all-zero shape.
Vector make_signature(SignatureKind kind, Index length, const SignatureParams& params);

enum class FactorFamily { Normal, Uniform };

struct FactorDistribution {
  FactorFamily family = FactorFamily::Normal;
  double mean = 0.0;
  double spread = 1.0;  // std for Normal, half-width for Uniform

  double draw(Rng& rng) const;
};

struct PlantedSignature {
  SignatureKind kind = SignatureKind::Step;
  SignatureParams params;
  FactorDistribution factor;
  bool shared = true;   // identical in every event of the class
  double jitter = 0.0;  // per-event relative perturbation of shape parameters when not shared
};

struct PlantedClass {
  EventClass cls = EventClass::Voltage;
  std::optional<Cause> cause;
  Index n_events = 1;
  std::array<std::vector<PlantedSignature>, kChannelCount> channels;
};

struct PlantedSpec {
  Index length = 600;
  Index event_index = 300;
  Index n_pmu = 20;
  Index pmu_pool = 0;            // registry size; 0 means n_pmu (every event sees every PMU)
  double noise_sigma = 0.01;
  double missing_probability = 0.0;  // chance that a PMU loses a stretch of samples in an event
  // Makes each event's unshared factor columns orthogonal to its shared ones.
  // The stacked inter-event estimate is exact on noiseless data only then.
  bool decorrelate_factors = false;
  std::uint64_t seed = 1;
  std::vector<PlantedClass> classes;

  Index n_events() const;
  void validate() const;
};

struct PlantedChannel {
  Matrix signatures;  // k x T, orthonormal zero-mean rows
  Matrix factors;     // N x k
  Index n_shared = 0; // leading rows that are shared across the class
};

struct PlantedEvent {
  std::array<PlantedChannel, kChannelCount> channels;
  std::uint64_t noise_seed = 0;
};

struct PlantedTruth {
  std::vector<PlantedEvent> events;  // parallel to Dataset::events
};

struct PlantedDataset {
  Dataset dataset;
  PlantedTruth truth;
};

/// Centers each row and orthonormalizes the set with CGS2. Throws if a row
/// becomes dependent.
Matrix orthonormalize_signatures(const Matrix& raw_rows);

/// factors * signatures + i.i.d. N(0, noise_sigma^2).
Matrix plant_channel(const Matrix& signatures, const Matrix& factors, double noise_sigma, Rng& rng);

/// Draws an N x k factor matrix, column j from `dists[j]`.
Matrix draw_factors(const std::vector<FactorDistribution>& dists, Index n, Rng& rng);

PlantedDataset plant_dataset(const PlantedSpec& spec);

PlantedSpec planted_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PlantedSpec& spec);

/// Two-class toy resembling the measured corpus: voltage dips with
/// recovery, frequency drops with a ramp, inter-area oscillations.
PlantedSpec default_toy_spec(Index n_voltage = 140, Index n_frequency = 20, Index n_pmu = 20,
                             std::uint64_t seed = 1);

}  // namespace pmuforge::toy
