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

// On-disk dataset format:
//
//   <root>/manifest.json   JSON array of
//                          {event_id, file, class, cause, event_start_index,
//                           sample_interval_seconds[, n_samples]}
//   <root>/<file>          CSV with header `pmu_id,t_index,P,Q,V,F`; absent
//                          rows and empty fields mark missing samples
//   <root>/provenance.json optional; {"dataset_provenance": "...", ...}
//
// Values are written in shortest round-trip form, so export followed by
// ingest is bit-exact on every valid sample.

#include <filesystem>
#include "json.hpp"
#include <optional>

#include "pmuforge/pqvf.hpp"

namespace pmuforge::io {

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kProvenanceName = "provenance.json";
inline constexpr const char* kCsvHeader = "pmu_id,t_index,P,Q,V,F";

/// Reads a dataset directory. `window.length` is the window size used when a
/// manifest record has no n_samples field.
Dataset ingest_csv(const std::filesystem::path& root, const WindowConfig& window = {});

/// Writes manifest, one CSV per event and provenance.json. `extra_provenance`
/// (an object) is merged into provenance.json.
void export_dataset(const Dataset& dataset, const std::filesystem::path& root,
                    const nlohmann::json& extra_provenance = nlohmann::json::object());

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Writes `text` to `path`, creating parent directories; throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);

/// A filesystem-safe stem derived from an event id.
std::string file_stem_for(std::string_view event_id);

}  // namespace pmuforge::io
