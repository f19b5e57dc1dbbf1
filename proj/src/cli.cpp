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

#include "pmuforge/cli.hpp"

#include <optional>

#include "CLI11.hpp"

#include "pmuforge/errors.hpp"
#include "pmuforge/io.hpp"
#include "pmuforge/parallel.hpp"
#include "pmuforge/pipeline.hpp"

namespace pmuforge::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string in;
  std::string fit;
  std::string synth;
  std::string measured;
  std::optional<Index> k_inter;
  std::optional<Index> k_intra;
  std::string model;
  std::optional<double> noise_sigma;
};

PipelineConfig effective_config(const Options& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_config(o.config);
  if (o.seed) c.apply_seed(*o.seed);
  if (!o.out.empty()) c.output = o.out;
  if (!o.in.empty()) c.input = fs::path(o.in);
  if (o.k_inter) c.synthesis.ranks.k_inter = *o.k_inter;
  if (o.k_intra) c.synthesis.ranks.k_intra = *o.k_intra;
  if (!o.model.empty()) c.synthesis.models.intra = models::parse_kind(o.model);
  if (o.noise_sigma) {
    c.synthesis.noise.sigma = *o.noise_sigma;
    c.synthesis.noise.validate();
  }
  return c;
}

void require_dir(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing ") + what);
  if (!fs::is_directory(path)) throw IoError(std::string(what) + " directory not found: " + path);
}

std::vector<ep::EPDecomposition> decompositions_for(const std::string& in, const PipelineConfig& c) {
  if (pipeline::is_decomposition_dir(in)) return pipeline::read_decompositions(in);
  return ep::decompose_dataset(pipeline::load_measured(in, c.window), c.synthesis.ranks);
}

int cmd_ingest(const Options& o, std::ostream& out) {
  const PipelineConfig c = effective_config(o);
  require_dir(o.in, "input");
  const Dataset d = pipeline::load_measured(o.in, c.window);
  io::export_dataset(d, o.out);
  out << "ingested " << d.events.size() << " events into " << o.out << "\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  PipelineConfig c = effective_config(o);
  if (o.seed) c.toy.seed = *o.seed;
  const toy::PlantedDataset planted = toy::plant_dataset(c.toy);
  io::export_dataset(planted.dataset, o.out, json{{"toy_spec", toy::to_json(c.toy)}});
  out << "planted " << planted.dataset.events.size() << " events into " << o.out << "\n";
  return kExitOk;
}

int cmd_decompose(const Options& o, std::ostream& out) {
  const PipelineConfig c = effective_config(o);
  require_dir(o.in, "input");
  const auto decomps = ep::decompose_dataset(pipeline::load_measured(o.in, c.window), c.synthesis.ranks);
  pipeline::write_decompositions(decomps, o.out);
  out << "decomposed " << decomps.size() << " events into " << o.out << "\n";
  return kExitOk;
}

int cmd_fit(const Options& o, std::ostream& out) {
  const PipelineConfig c = effective_config(o);
  require_dir(o.in, "input");
  const auto decomps = decompositions_for(o.in, c);
  std::vector<synthesis::EventModels> fitted(decomps.size());
  parallel_for(decomps.size(), [&](std::size_t i) {
    fitted[i] = synthesis::fit_event_models(decomps[i], c.synthesis.models, derive_seed(c.seed, "fit", i));
  });
  pipeline::write_models(decomps, fitted, o.out);
  out << "fitted models for " << decomps.size() << " events into " << o.out << "\n";
  return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out) {
  const PipelineConfig c = effective_config(o);
  require_dir(o.in, "input");
  const auto decomps = decompositions_for(o.in, c);
  synthesis::SyntheticDataset synth;
  if (!o.fit.empty()) {
    require_dir(o.fit, "fit");
    const auto fitted = pipeline::read_models(decomps, o.fit);
    synth = synthesis::generate_from_decompositions(decomps, c.synthesis, &fitted);
  } else {
    synth = synthesis::generate_from_decompositions(decomps, c.synthesis);
  }
  synthesis::export_synthetic(synth, o.out);
  out << "generated " << synth.dataset.events.size() << " synthetic events into " << o.out << "\n";
  return kExitOk;
}

int cmd_audit(const Options& o, std::ostream& out) {
  const PipelineConfig c = effective_config(o);
  require_dir(o.synth, "synthetic");
  require_dir(o.measured, "measured");
  const Dataset s = pipeline::load_measured(o.synth, c.window);
  const Dataset m = pipeline::load_measured(o.measured, c.window);
  const audit::AuditReport r = pipeline::audit_stage(s, m, c.audit, o.out);
  out << "max event correlation " << r.max_event_corr << (r.flagged_events.empty() ? "" : " (flagged)") << "\n";
  if (r.max_pmu_corr) out << "max pmu correlation " << *r.max_pmu_corr << (r.flagged_pmus.empty() ? "" : " (flagged)") << "\n";
  return kExitOk;
}

int cmd_score(const Options& o, std::ostream& out) {
  const PipelineConfig c = effective_config(o);
  require_dir(o.synth, "synthetic");
  require_dir(o.measured, "measured");
  const Dataset s = pipeline::load_measured(o.synth, c.window);
  const Dataset m = pipeline::load_measured(o.measured, c.window);
  const scoring::CrossScoreTable t = pipeline::score_stage(s, m, c.scoring, o.out);
  out << t.to_csv();
  return kExitOk;
}

int cmd_pipeline(const Options& o, std::ostream& out) {
  const PipelineConfig c = effective_config(o);
  if (c.input) require_dir(c.input->string(), "input");
  const pipeline::RunSummary s = pipeline::run_pipeline(c);
  out << "events " << s.events << ", max event correlation " << s.max_event_corr
      << (s.event_flagged ? " (flagged)" : "") << "\n"
      << s.scores.to_csv() << "wrote " << c.output.string() << " in " << s.seconds << " s\n";
  return kExitOk;
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic PMU event data: decomposition, factor models, synthesis, audit and scoring", "pmuforge"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* s) { s->add_option("--config", o.config, "pipeline config JSON"); };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", o.out, "output directory")->required(); };
  auto add_seed = [&](CLI::App* s, const char* help) { s->add_option("--seed", o.seed, help); };
  auto add_ranks = [&](CLI::App* s) {
    s->add_option("--k-inter", o.k_inter, "inter-event signatures per channel")->check(CLI::NonNegativeNumber);
    s->add_option("--k-intra", o.k_intra, "intra-event signatures per channel")->check(CLI::NonNegativeNumber);
  };
  auto add_model = [&](CLI::App* s) {
    s->add_option("--model", o.model, "intra-event factor model")->check(CLI::IsMember({"copula", "gmm", "gan"}));
  };

  CLI::App* ingest = app.add_subcommand("ingest", "read, clean and standardize a dataset directory");
  add_config(ingest);
  ingest->add_option("--in", o.in, "dataset directory")->required();
  add_out(ingest);

  CLI::App* simulate = app.add_subcommand("simulate-toy", "write a planted toy dataset");
  add_config(simulate);
  add_seed(simulate, "toy dataset seed");
  add_out(simulate);

  CLI::App* decompose = app.add_subcommand("decompose", "event-participation decomposition of every event");
  add_config(decompose);
  decompose->add_option("--in", o.in, "dataset directory")->required();
  add_ranks(decompose);
  add_out(decompose);

  CLI::App* fit = app.add_subcommand("fit", "fit participation-factor models");
  add_config(fit);
  fit->add_option("--in", o.in, "dataset or decomposition directory")->required();
  add_seed(fit, "master seed");
  add_ranks(fit);
  add_model(fit);
  add_out(fit);

  CLI::App* generate = app.add_subcommand("generate", "synthesize events");
  add_config(generate);
  generate->add_option("--in", o.in, "dataset or decomposition directory")->required();
  generate->add_option("--fit", o.fit, "directory with models.json from `fit`");
  add_seed(generate, "master seed");
  add_ranks(generate);
  add_model(generate);
  generate->add_option("--noise-sigma", o.noise_sigma, "white noise std")->check(CLI::NonNegativeNumber);
  add_out(generate);

  CLI::App* aud = app.add_subcommand("audit", "similarity audit of synthetic against measured data");
  add_config(aud);
  aud->add_option("--synth", o.synth, "synthetic dataset directory")->required();
  aud->add_option("--measured", o.measured, "measured dataset directory")->required();
  add_out(aud);

  CLI::App* score = app.add_subcommand("score", "train/test cross scores");
  add_config(score);
  score->add_option("--synth", o.synth, "synthetic dataset directory")->required();
  score->add_option("--measured", o.measured, "measured dataset directory")->required();
  add_seed(score, "master seed");
  add_out(score);

  CLI::App* pipe = app.add_subcommand("pipeline", "toy or ingest, generate, audit, score");
  add_config(pipe);
  pipe->add_option("--in", o.in, "measured dataset directory (default: planted toy data)");
  add_seed(pipe, "master seed");
  add_ranks(pipe);
  add_model(pipe);
  pipe->add_option("--noise-sigma", o.noise_sigma, "white noise std")->check(CLI::NonNegativeNumber);
  pipe->add_option("--out", o.out, "output directory (default from config)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (decompose->parsed()) return cmd_decompose(o, out);
    if (fit->parsed()) return cmd_fit(o, out);
    if (generate->parsed()) return cmd_generate(o, out);
    if (aud->parsed()) return cmd_audit(o, out);
    if (score->parsed()) return cmd_score(o, out);
    if (pipe->parsed()) return cmd_pipeline(o, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace pmuforge::cli
