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

#include "pmuforge/config.hpp"

#include <algorithm>

#include "pmuforge/errors.hpp"
#include "pmuforge/io.hpp"
#include "pmuforge/rng.hpp"

namespace pmuforge {

using nlohmann::json;

void PipelineConfig::apply_seed(std::uint64_t master) {
  seed = master;
  synthesis.master_seed = master;
  scoring.seed = derive_seed(master, "score");
}

PipelineConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  static const char* const kKeys[] = {"seed",  "input", "output", "window",  "ranks",   "models",
                                      "noise", "n_pmu", "audit",  "scoring", "toy"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; }) == std::end(kKeys)) {
      throw ValidationError("config: unknown key '" + key + "'");
    }
  }
  try {
    PipelineConfig c;
    if (doc.contains("input") && !doc.at("input").is_null()) c.input = doc.at("input").get<std::string>();
    if (doc.contains("output")) c.output = doc.at("output").get<std::string>();
    if (doc.contains("window")) {
      const json& w = doc.at("window");
      c.window.length = w.value("length", c.window.length);
      c.window.event_index = w.value("event_index", c.window.event_index);
      if (c.window.length < 2 || c.window.event_index < 0 || c.window.event_index >= c.window.length) {
        throw ValidationError("config: window needs length >= 2 and 0 <= event_index < length");
      }
    }
    if (doc.contains("ranks")) {
      c.synthesis.ranks.k_inter = doc.at("ranks").value("k_inter", c.synthesis.ranks.k_inter);
      c.synthesis.ranks.k_intra = doc.at("ranks").value("k_intra", c.synthesis.ranks.k_intra);
    }
    if (doc.contains("models")) c.synthesis.models = synthesis::model_settings_from_json(doc.at("models"));
    if (doc.contains("noise")) c.synthesis.noise = synthesis::noise_from_json(doc.at("noise"));
    c.synthesis.n_pmu = doc.value("n_pmu", c.synthesis.n_pmu);
    if (doc.contains("audit")) c.audit = audit::audit_config_from_json(doc.at("audit"));
    if (doc.contains("scoring")) c.scoring = scoring::train_config_from_json(doc.at("scoring"));
    if (doc.contains("toy")) {
      const json& t = doc.at("toy");
      if (t.contains("classes")) {
        c.toy = toy::planted_spec_from_json(t);
      } else {
        c.toy = toy::default_toy_spec(t.value("n_voltage", Index{140}), t.value("n_frequency", Index{20}),
                                      t.value("n_pmu", Index{20}), t.value("seed", std::uint64_t{1}));
        c.toy.noise_sigma = t.value("noise_sigma", c.toy.noise_sigma);
        c.toy.missing_probability = t.value("missing_probability", c.toy.missing_probability);
        c.toy.validate();
      }
    }
    const bool explicit_score_seed = doc.contains("scoring") && doc.at("scoring").contains("seed");
    const std::uint64_t score_seed = c.scoring.seed;
    c.apply_seed(doc.value("seed", c.seed));
    if (explicit_score_seed) c.scoring.seed = score_seed;
    if (c.synthesis.ranks.k_inter < 0 || c.synthesis.ranks.k_intra < 0 ||
        c.synthesis.ranks.k_inter + c.synthesis.ranks.k_intra < 1) {
      throw ValidationError("config: ranks must be non-negative with at least one signature");
    }
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

json to_json(const PipelineConfig& c) {
  return json{{"seed", c.seed},
              {"input", c.input ? json(c.input->string()) : json(nullptr)},
              {"output", c.output.string()},
              {"window", json{{"length", c.window.length}, {"event_index", c.window.event_index}}},
              {"ranks", json{{"k_inter", c.synthesis.ranks.k_inter}, {"k_intra", c.synthesis.ranks.k_intra}}},
              {"models", synthesis::to_json(c.synthesis.models)},
              {"noise", synthesis::to_json(c.synthesis.noise)},
              {"n_pmu", c.synthesis.n_pmu},
              {"audit", audit::to_json(c.audit)},
              {"scoring", scoring::to_json(c.scoring)},
              {"toy", toy::to_json(c.toy)}};
}

PipelineConfig load_config(const std::filesystem::path& path) { return config_from_json(io::read_json_file(path)); }

}  // namespace pmuforge
