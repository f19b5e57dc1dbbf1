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

#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "pmuforge/audit.hpp"
#include "pmuforge/scoring.hpp"
#include "pmuforge/synthesis.hpp"
#include "pmuforge/toy.hpp"

namespace pmuforge {

/// Everything a pipeline run depends on. Serializes to one JSON document;
/// absent keys take the defaults below.
struct PipelineConfig {
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> input;  // measured dataset; absent: planted toy data
  std::filesystem::path output = "pmuforge-out";
  WindowConfig window;
  toy::PlantedSpec toy = toy::default_toy_spec();
  synthesis::SynthesisConfig synthesis;  // master_seed follows `seed`
  audit::AuditConfig audit;
  scoring::TrainConfig scoring;  // seed derived from `seed`

  /// Re-derives the seeds that follow the master seed.
  void apply_seed(std::uint64_t master);
};

/// The toy section accepts either a full planted spec (with "classes") or a
/// preset: {"n_voltage", "n_frequency", "n_pmu", "seed", "noise_sigma",
/// "missing_probability"}.
PipelineConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PipelineConfig& config);

/// Reads and parses a config file; IoError when unreadable.
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace pmuforge
