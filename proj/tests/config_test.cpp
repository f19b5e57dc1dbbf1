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

#include <gtest/gtest.h>

#include <fstream>

#include "pmuforge/config.hpp"
#include "pmuforge/errors.hpp"
#include "pmuforge/rng.hpp"
#include "test_util.hpp"

namespace pmuforge {
namespace {

using nlohmann::json;

TEST(Config, Defaults) {
  const PipelineConfig c = config_from_json(json::object());
  EXPECT_EQ(c.seed, 1u);
  EXPECT_FALSE(c.input.has_value());
  EXPECT_EQ(c.window.length, 600);
  EXPECT_EQ(c.window.event_index, 300);
  EXPECT_EQ(c.synthesis.ranks.k_inter, 4);
  EXPECT_EQ(c.synthesis.ranks.k_intra, 4);
  EXPECT_EQ(c.synthesis.noise.sigma, 0.02);
  EXPECT_EQ(c.synthesis.master_seed, 1u);
  EXPECT_EQ(c.scoring.seed, derive_seed(1, "score"));
  EXPECT_EQ(c.scoring.epochs, 200);
  EXPECT_EQ(c.scoring.batch, 50);
  EXPECT_EQ(c.audit.event_threshold, 0.25);
  EXPECT_EQ(c.toy.n_events(), 160);
}

TEST(Config, RoundTrip) {
  json doc = json::parse(R"({"seed": 9, "input": "/data/x", "ranks": {"k_inter": 2, "k_intra": 3},
    "models": {"intra": "gmm"}, "noise": {"family": "none", "sigma": 0}, "n_pmu": 30,
    "scoring": {"epochs": 20, "holdout": true}, "toy": {"n_voltage": 7, "n_frequency": 1, "n_pmu": 5}})");
  const PipelineConfig c = config_from_json(doc);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.synthesis.master_seed, 9u);
  EXPECT_EQ(c.input->string(), "/data/x");
  EXPECT_EQ(c.synthesis.models.intra, models::ModelKind::Gmm);
  EXPECT_EQ(c.synthesis.n_pmu, 30);
  EXPECT_TRUE(c.scoring.holdout);
  EXPECT_EQ(c.toy.n_events(), 8);
  const json once = to_json(c);
  EXPECT_EQ(to_json(config_from_json(once)), once);
}

TEST(Config, ExplicitScoringSeedWins) {
  const PipelineConfig c = config_from_json(json{{"seed", 3}, {"scoring", {{"seed", 11}}}});
  EXPECT_EQ(c.scoring.seed, 11u);
  EXPECT_EQ(c.synthesis.master_seed, 3u);
}

TEST(Config, Rejections) {
  EXPECT_THROW(config_from_json(json{{"sede", 1}}), ValidationError);
  EXPECT_THROW(config_from_json(json::array()), ValidationError);
  EXPECT_THROW(config_from_json(json{{"seed", "one"}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"ranks", {{"k_inter", 0}, {"k_intra", 0}}}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"window", {{"length", 10}, {"event_index", 10}}}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"models", {{"intra", "vae"}}}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"noise", {{"sigma", -1}}}}), ValidationError);
}

TEST(Config, LoadFromFile) {
  const auto dir = testing::scratch_dir("config_load");
  EXPECT_THROW(load_config(dir / "absent.json"), IoError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json"), ValidationError);
  const PipelineConfig bundled = load_config(std::filesystem::path(PMUFORGE_SOURCE_DIR) / "configs" / "toy.json");
  EXPECT_EQ(bundled.toy.n_events(), 160);
  EXPECT_EQ(bundled.seed, 1u);
}

}  // namespace
}  // namespace pmuforge
