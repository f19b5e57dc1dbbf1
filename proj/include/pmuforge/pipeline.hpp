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

// Stage functions shared by the CLI subcommands. Each stage reads and writes
// the on-disk formats, so a run can resume from any intermediate directory.
//
// Output directory of a full run:
//   effective_config.json  measured/  synthetic/  provenance.json
//   audit_report.json  event_correlation_histogram.csv
//   pmu_correlation_histogram.csv  cross_scores.csv  cross_scores.json
//   run_meta.json (timings; the only file that differs between reruns)

#include <filesystem>
#include <vector>

#include "pmuforge/config.hpp"

namespace pmuforge::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kDecompositionIndex = "decompositions.json";
inline constexpr const char* kModelsFile = "models.json";

/// ingest_csv followed by prepare_dataset.
Dataset load_measured(const fs::path& dir, const WindowConfig& window);

/// Planted toy dataset before preparation (may contain masked samples).
Dataset simulate_toy(const toy::PlantedSpec& spec);

void write_decompositions(const std::vector<ep::EPDecomposition>& decomps, const fs::path& dir);
std::vector<ep::EPDecomposition> read_decompositions(const fs::path& dir);
bool is_decomposition_dir(const fs::path& dir);

void write_models(const std::vector<ep::EPDecomposition>& decomps, const std::vector<synthesis::EventModels>& models,
                  const fs::path& dir);
/// Models in the order of `decomps`, matched by event id.
std::vector<synthesis::EventModels> read_models(const std::vector<ep::EPDecomposition>& decomps, const fs::path& dir);

/// Writes audit_report.json and the two histogram CSVs into `dir`.
audit::AuditReport audit_stage(const Dataset& synth, const Dataset& measured, const audit::AuditConfig& config,
                               const fs::path& dir);

/// Writes cross_scores.csv and cross_scores.json into `dir`.
scoring::CrossScoreTable score_stage(const Dataset& synth, const Dataset& measured,
                                     const scoring::TrainConfig& config, const fs::path& dir);

struct RunSummary {
  std::size_t events = 0;
  double max_event_corr = 0.0;
  bool event_flagged = false;
  bool pmu_flagged = false;
  scoring::CrossScoreTable scores;
  double seconds = 0.0;
};

/// simulate-toy or ingest, then generate, audit and score into config.output.
RunSummary run_pipeline(const PipelineConfig& config);

}  // namespace pmuforge::pipeline
