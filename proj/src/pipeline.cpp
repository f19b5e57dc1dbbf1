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

#include "pmuforge/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <map>

#include "pmuforge/errors.hpp"
#include "pmuforge/io.hpp"
#include "pmuforge/kernels.hpp"
#include "pmuforge/parallel.hpp"

namespace pmuforge::pipeline {

using nlohmann::json;

Dataset load_measured(const fs::path& dir, const WindowConfig& window) {
  return prepare_dataset(io::ingest_csv(dir, window));
}

Dataset simulate_toy(const toy::PlantedSpec& spec) { return toy::plant_dataset(spec).dataset; }

void write_decompositions(const std::vector<ep::EPDecomposition>& decomps, const fs::path& dir) {
  json index = json::array();
  for (const auto& d : decomps) {
    const std::string stem = io::file_stem_for(d.event_id);
    ep::export_decomposition(d, dir / stem);
    index.push_back(json{{"event_id", d.event_id}, {"dir", stem}});
  }
  io::write_json_file(dir / kDecompositionIndex, json{{"events", std::move(index)}});
}

bool is_decomposition_dir(const fs::path& dir) { return fs::exists(dir / kDecompositionIndex); }

std::vector<ep::EPDecomposition> read_decompositions(const fs::path& dir) {
  const json index = io::read_json_file(dir / kDecompositionIndex);
  std::vector<ep::EPDecomposition> out;
  try {
    for (const auto& e : index.at("events")) out.push_back(ep::import_decomposition(dir / e.at("dir").get<std::string>()));
  } catch (const json::exception& e) {
    throw ValidationError((dir / kDecompositionIndex).string() + ": " + e.what());
  }
  return out;
}

void write_models(const std::vector<ep::EPDecomposition>& decomps, const std::vector<synthesis::EventModels>& models,
                  const fs::path& dir) {
  if (decomps.size() != models.size()) throw ValidationError("write_models: count mismatch");
  json events = json::array();
  for (std::size_t i = 0; i < decomps.size(); ++i) {
    events.push_back(json{{"event_id", decomps[i].event_id},
                          {"inter", models[i].inter ? models::to_json(*models[i].inter) : json(nullptr)},
                          {"intra", models[i].intra ? models::to_json(*models[i].intra) : json(nullptr)}});
  }
  io::write_json_file(dir / kModelsFile, json{{"events", std::move(events)}});
}

std::vector<synthesis::EventModels> read_models(const std::vector<ep::EPDecomposition>& decomps, const fs::path& dir) {
  const json doc = io::read_json_file(dir / kModelsFile);
  std::map<std::string, synthesis::EventModels> by_id;
  try {
    for (const auto& e : doc.at("events")) {
      synthesis::EventModels m;
      if (!e.at("inter").is_null()) m.inter = models::model_from_json(e.at("inter"));
      if (!e.at("intra").is_null()) m.intra = models::model_from_json(e.at("intra"));
      by_id[e.at("event_id").get<std::string>()] = std::move(m);
    }
  } catch (const json::exception& e) {
    throw ValidationError((dir / kModelsFile).string() + ": " + e.what());
  }
  std::vector<synthesis::EventModels> out;
  for (const auto& d : decomps) {
    const auto it = by_id.find(d.event_id);
    if (it == by_id.end()) throw ValidationError("no fitted models for event '" + d.event_id + "'");
    out.push_back(it->second);
  }
  return out;
}

audit::AuditReport audit_stage(const Dataset& synth, const Dataset& measured, const audit::AuditConfig& config,
                               const fs::path& dir) {
  audit::AuditReport report = audit::run_audit(synth, measured, config);
  io::write_json_file(dir / "audit_report.json", report.to_json());
  if (!report.event_histogram.counts.empty()) {
    io::write_text_file(dir / "event_correlation_histogram.csv", audit::histogram_csv(report.event_histogram));
  }
  if (!report.pmu_histogram.counts.empty()) {
    io::write_text_file(dir / "pmu_correlation_histogram.csv", audit::histogram_csv(report.pmu_histogram));
  }
  return report;
}

scoring::CrossScoreTable score_stage(const Dataset& synth, const Dataset& measured,
                                     const scoring::TrainConfig& config, const fs::path& dir) {
  scoring::CrossScoreTable table = scoring::cross_score(synth, measured, config);
  io::write_text_file(dir / "cross_scores.csv", table.to_csv());
  io::write_json_file(dir / "cross_scores.json", table.to_json());
  return table;
}

RunSummary run_pipeline(const PipelineConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = config.output;
  io::write_json_file(out / "effective_config.json", to_json(config));

  json source;
  Dataset measured;
  if (config.input) {
    measured = load_measured(*config.input, config.window);
    source = json{{"kind", "ingested"}, {"path", config.input->string()}};
  } else {
    measured = prepare_dataset(simulate_toy(config.toy));
    source = json{{"kind", "toy"}, {"seed", config.toy.seed}};
  }
  io::export_dataset(measured, out / "measured", json{{"source", source}});

  const synthesis::SyntheticDataset synth = synthesis::generate_dataset(measured, config.synthesis);
  synthesis::export_synthetic(synth, out / "synthetic");
  json prov = synth.provenance_json();
  prov["measured_source"] = source;
  prov["measured_events"] = measured.events.size();
  io::write_json_file(out / io::kProvenanceName, prov);

  const audit::AuditReport report = audit_stage(synth.dataset, measured, config.audit, out);
  RunSummary summary;
  summary.scores = score_stage(synth.dataset, measured, config.scoring, out);
  summary.events = measured.events.size();
  summary.max_event_corr = report.max_event_corr;
  summary.event_flagged = !report.flagged_events.empty();
  summary.pmu_flagged = !report.flagged_pmus.empty();
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  io::write_json_file(out / "run_meta.json", json{{"finished_at", stamp},
                                                  {"wall_seconds", summary.seconds},
                                                  {"threads", worker_count()},
                                                  {"kernels", kernels::backend_name(kernels::active_backend())}});
  return summary;
}

}  // namespace pmuforge::pipeline
