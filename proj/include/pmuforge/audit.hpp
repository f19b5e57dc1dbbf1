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

// Similarity screening between synthetic and measured datasets, plus a few
// fidelity probes for known weaknesses of synthetic events.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pmuforge/pqvf.hpp"

namespace pmuforge::audit {

/// <a, b> / (||a|| ||b||) over entries valid in both; 0 when either norm is
/// zero. Clamped to [-1, 1].
double normalized_inner(std::span<const double> a, std::span<const double> b);

/// Normalized inner product over all PMUs, samples and channels.
double tensor_correlation(const EventTensor& a, const EventTensor& b);

struct EventCorrelation {
  std::string event_id;
  double value = 0.0;
};

/// One entry per synthetic event, paired with the measured event of the same
/// id. Throws ValidationError for an event present in only one dataset or a
/// pair whose shapes differ.
std::vector<EventCorrelation> event_id_correlations(const Dataset& synth, const Dataset& measured);

struct PmuCorrelations {
  std::vector<std::string> pmu_ids;
  std::vector<double> values;
  std::size_t skipped = 0;  // PMUs that appear in only one dataset
};

/// Per PMU, the normalized inner product of its T x 4 blocks concatenated
/// over every paired event containing it in both datasets.
PmuCorrelations pmu_id_correlations(const Dataset& synth, const Dataset& measured);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

/// Uniform bins over [-1, 1]; the last bin includes 1. Values outside the
/// range are clamped into the end bins.
Histogram histogram(std::span<const double> values, std::size_t bins);

std::string histogram_csv(const Histogram& h);

/// Fraction of PMUs whose mean V over the second after the event start
/// exceeds the mean over the second before by more than `threshold`.
double wrong_direction_fraction(const EventTensor& event, double threshold = 0.1);

/// Cross-PMU population standard deviation of F at every sample.
Vector banding_dispersion(const EventTensor& event);

struct DampingEstimate {
  bool oscillatory = false;
  std::size_t extrema = 0;
  double slope = 0.0;  // d log|amplitude| / d(extremum index)
};

/// Uses alternating extrema after `event_index` whose magnitude is at least
/// 5% of the largest post-event magnitude. Fewer than three means the
/// signature is not oscillatory.
DampingEstimate oscillation_damping(std::span<const double> signature, Index event_index);

struct AuditConfig {
  double event_threshold = 0.25;
  double pmu_threshold = 0.21;
  std::size_t bins = 40;
  double wrong_direction_threshold = 0.1;
};

struct ChannelDamping {
  DampingEstimate synthetic;
  DampingEstimate measured;
};

struct EventFidelity {
  std::string event_id;
  EventClass cls = EventClass::Voltage;
  std::optional<double> wrong_direction_synthetic;
  std::optional<double> wrong_direction_measured;
  std::optional<double> banding_l1;
  std::array<ChannelDamping, kChannelCount> damping;
};

struct AuditReport {
  AuditConfig config;
  std::vector<EventCorrelation> event_correlations;
  Histogram event_histogram;
  PmuCorrelations pmu_correlations;
  Histogram pmu_histogram;
  double max_event_corr = 0.0;
  std::optional<double> max_pmu_corr;
  std::vector<std::string> flagged_events;
  std::vector<std::string> flagged_pmus;
  std::vector<EventFidelity> fidelity;

  nlohmann::json to_json() const;
};

AuditReport run_audit(const Dataset& synth, const Dataset& measured, const AuditConfig& config = {});

nlohmann::json to_json(const AuditConfig& config);
AuditConfig audit_config_from_json(const nlohmann::json& doc);

}  // namespace pmuforge::audit
