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

#include "pmuforge/synthesis.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "pmuforge/errors.hpp"
#include "pmuforge/io.hpp"
#include "pmuforge/parallel.hpp"
#include "pmuforge/rng.hpp"

namespace pmuforge::synthesis {

using ep::BlockLabel;
using nlohmann::json;

std::string_view noise_family_name(NoiseFamily f) { return f == NoiseFamily::Gaussian ? "gaussian" : "none"; }

NoiseFamily parse_noise_family(std::string_view name) {
  if (name == "gaussian") return NoiseFamily::Gaussian;
  if (name == "none") return NoiseFamily::None;
  throw ValidationError("unknown noise family '" + std::string(name) + "'");
}

void NoiseModel::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("noise sigma must be finite and >= 0");
}

const std::optional<models::FactorModel>& EventModels::get(BlockLabel label) const {
  return label == BlockLabel::Inter ? inter : intra;
}

Index block_width(const ep::EPDecomposition& decomp, BlockLabel label) {
  Index w = 0;
  for (const auto& c : decomp.channels) w += c.block_rank(label);
  return w;
}

Matrix block_factors(const ep::EPDecomposition& decomp, BlockLabel label) {
  const Index n = static_cast<Index>(decomp.pmu_ids.size());
  Matrix out(n, block_width(decomp, label));
  Index off = 0;
  for (const auto& c : decomp.channels) {
    const Matrix b = c.participation_block(label);
    if (b.rows() != n) throw ValidationError("event '" + decomp.event_id + "': participation rows differ from PMU count");
    out.middleCols(off, b.cols()) = b;
    off += b.cols();
  }
  return out;
}

EventModels fit_event_models(const ep::EPDecomposition& decomp, const ModelSettings& settings, std::uint64_t seed) {
  EventModels out;
  for (const BlockLabel label : {BlockLabel::Inter, BlockLabel::Intra}) {
    const Matrix f = block_factors(decomp, label);
    if (f.cols() == 0) continue;
    const models::ModelKind kind = label == BlockLabel::Inter ? settings.inter : settings.intra;
    const std::uint64_t s = derive_seed(seed, ep::block_name(label));
    models::FactorModel m;
    switch (kind) {
      case models::ModelKind::Copula:
        m = models::fit_copula(f);
        break;
      case models::ModelKind::Gmm: {
        models::GmmConfig cfg = settings.gmm;
        cfg.seed = s;
        m = models::fit_gmm(f, cfg);
        break;
      }
      case models::ModelKind::Adversarial: {
        models::AdversarialConfig cfg = settings.adversarial;
        cfg.seed = s;
        cfg.batch = std::min(cfg.batch, f.rows());
        m = models::fit_adversarial(f, cfg);
        break;
      }
      case models::ModelKind::Replay:
        m = models::replay_model(f);
        break;
    }
    m.key = decomp.event_id + "/" + std::string(ep::block_name(label));
    (label == BlockLabel::Inter ? out.inter : out.intra) = std::move(m);
  }
  return out;
}

EventModels replay_models(const ep::EPDecomposition& decomp) {
  EventModels out;
  for (const BlockLabel label : {BlockLabel::Inter, BlockLabel::Intra}) {
    const Matrix f = block_factors(decomp, label);
    if (f.cols() == 0) continue;
    (label == BlockLabel::Inter ? out.inter : out.intra) = models::replay_model(f);
  }
  return out;
}

RawSynthesis synthesize_raw(const ep::EPDecomposition& decomp, const EventModels& models, Index n_pmu,
                            const NoiseModel& noise, std::uint64_t seed) {
  noise.validate();
  if (n_pmu < 1) throw ValidationError("synthesize: n_pmu must be positive");
  RawSynthesis out;
  for (const BlockLabel label : {BlockLabel::Inter, BlockLabel::Intra}) {
    const Index width = block_width(decomp, label);
    Matrix& target = label == BlockLabel::Inter ? out.inter_factors : out.intra_factors;
    if (width == 0) {
      target.resize(n_pmu, 0);
      continue;
    }
    const auto& m = models.get(label);
    if (!m) {
      throw ValidationError("event '" + decomp.event_id + "': no model for the " + std::string(ep::block_name(label)) +
                            " block");
    }
    if (m->dim != width) {
      throw ValidationError("event '" + decomp.event_id + "': " + std::string(ep::block_name(label)) + " model has " +
                            std::to_string(m->dim) + " dimensions but the block has " + std::to_string(width) +
                            " signatures");
    }
    target = models::sample(*m, n_pmu, derive_seed(seed, ep::block_name(label)));
  }

  Rng noise_rng(derive_seed(seed, "noise"));
  std::array<Index, 2> offset{0, 0};
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const ep::ChannelDecomposition& cd = decomp.channels[c];
    const Matrix& basis = cd.signatures.basis;
    Matrix p(n_pmu, basis.rows());
    for (Index j = 0; j < basis.rows(); ++j) {
      const BlockLabel label = cd.signatures.labels[static_cast<std::size_t>(j)];
      if (label == BlockLabel::Extra) throw ValidationError("synthesize: extra-event signatures are not modelled");
      const std::size_t b = label == BlockLabel::Inter ? 0 : 1;
      p.col(j) = (b == 0 ? out.inter_factors : out.intra_factors).col(offset[b]++);
    }
    out.clean[c] = linalg::expand_rows(p, basis);
    out.noise[c] = Matrix::Zero(n_pmu, basis.cols());
    if (noise.active()) {
      for (Index i = 0; i < n_pmu; ++i) {
        for (Index t = 0; t < basis.cols(); ++t) out.noise[c](i, t) = noise.sigma * standard_normal(noise_rng);
      }
    }
  }
  return out;
}

namespace {

EventTensor assemble_event(const ep::EPDecomposition& decomp, const RawSynthesis& raw, Index n_pmu) {
  std::vector<std::string> ids;
  if (n_pmu == static_cast<Index>(decomp.pmu_ids.size())) {
    ids = decomp.pmu_ids;
  } else {
    for (Index i = 0; i < n_pmu; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "syn-pmu-%03lld", static_cast<long long>(i));
      ids.emplace_back(buf);
    }
  }
  std::array<Matrix, kChannelCount> channels;
  for (std::size_t c = 0; c < kChannelCount; ++c) channels[c] = raw.clean[c] + raw.noise[c];
  EventTensor e = EventTensor::from_channels(decomp.event_id, decomp.label, std::move(ids), std::move(channels),
                                             decomp.event_start_index, decomp.sample_interval);
  return standardize(e).event;
}

}  // namespace

EventTensor synthesize_event(const ep::EPDecomposition& decomp, const EventModels& models, Index n_pmu,
                             const NoiseModel& noise, std::uint64_t seed) {
  return assemble_event(decomp, synthesize_raw(decomp, models, n_pmu, noise, seed), n_pmu);
}

double min_row_distance(const Matrix& a, const Matrix& b) {
  double best = std::numeric_limits<double>::infinity();
  if (a.cols() != b.cols()) throw ValidationError("min_row_distance: width mismatch");
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
  }
  return std::sqrt(best);
}

SyntheticDataset generate_from_decompositions(const std::vector<ep::EPDecomposition>& decomps,
                                              const SynthesisConfig& config, const std::vector<EventModels>* fitted) {
  config.noise.validate();
  if (fitted != nullptr && fitted->size() != decomps.size()) {
    throw ValidationError("generate: " + std::to_string(fitted->size()) + " fitted model sets for " +
                          std::to_string(decomps.size()) + " events");
  }
  SyntheticDataset out;
  out.config = config;
  out.dataset.provenance = Provenance::Synthetic;
  out.dataset.events.resize(decomps.size());
  out.records.resize(decomps.size());

  parallel_for(decomps.size(), [&](std::size_t i) {
    const ep::EPDecomposition& d = decomps[i];
    try {
      EventProvenance rec;
      rec.source_event_id = d.event_id;
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        rec.k_inter[c] = d.channels[c].block_rank(BlockLabel::Inter);
        rec.k_intra[c] = d.channels[c].block_rank(BlockLabel::Intra);
      }
      rec.inter_model = std::string(models::kind_name(config.models.inter));
      rec.intra_model = std::string(models::kind_name(config.models.intra));
      rec.fit_seed = derive_seed(config.master_seed, "fit", i);
      rec.sample_seed = derive_seed(config.master_seed, "sample", i);
      const EventModels m = fitted != nullptr ? (*fitted)[i] : fit_event_models(d, config.models, rec.fit_seed);
      if (fitted != nullptr) {
        rec.inter_model = m.inter ? std::string(models::kind_name(m.inter->kind)) : "none";
        rec.intra_model = m.intra ? std::string(models::kind_name(m.intra->kind)) : "none";
      }
      const Index n_pmu = config.n_pmu > 0 ? config.n_pmu : static_cast<Index>(d.pmu_ids.size());
      const RawSynthesis raw = synthesize_raw(d, m, n_pmu, config.noise, rec.sample_seed);

      Matrix sampled(n_pmu, raw.inter_factors.cols() + raw.intra_factors.cols());
      sampled << raw.inter_factors, raw.intra_factors;
      const Matrix inter = block_factors(d, BlockLabel::Inter);
      const Matrix intra = block_factors(d, BlockLabel::Intra);
      Matrix measured(inter.rows(), inter.cols() + intra.cols());
      measured << inter, intra;
      rec.min_factor_distance = min_row_distance(sampled, measured);

      out.dataset.events[i] = assemble_event(d, raw, n_pmu);
      out.records[i] = std::move(rec);
    } catch (const Error& e) {
      throw Error("event '" + d.event_id + "': " + e.what());
    }
  });
  return out;
}

SyntheticDataset generate_dataset(const Dataset& measured, const SynthesisConfig& config) {
  return generate_from_decompositions(ep::decompose_dataset(measured, config.ranks), config);
}

json to_json(const NoiseModel& noise) {
  return json{{"family", noise_family_name(noise.family)}, {"sigma", noise.sigma}};
}

NoiseModel noise_from_json(const json& doc) {
  NoiseModel n;
  if (doc.contains("family")) n.family = parse_noise_family(doc.at("family").get<std::string>());
  n.sigma = doc.value("sigma", n.sigma);
  n.validate();
  return n;
}

json to_json(const ModelSettings& s) {
  return json{{"inter", models::kind_name(s.inter)},
              {"intra", models::kind_name(s.intra)},
              {"gmm", models::to_json(s.gmm)},
              {"adversarial", models::to_json(s.adversarial)}};
}

ModelSettings model_settings_from_json(const json& doc) {
  ModelSettings s;
  if (doc.contains("inter")) s.inter = models::parse_kind(doc.at("inter").get<std::string>());
  if (doc.contains("intra")) s.intra = models::parse_kind(doc.at("intra").get<std::string>());
  if (doc.contains("gmm")) s.gmm = models::gmm_config_from_json(doc.at("gmm"));
  if (doc.contains("adversarial")) s.adversarial = models::adversarial_config_from_json(doc.at("adversarial"));
  return s;
}

json SyntheticDataset::provenance_json() const {
  json events = json::array();
  for (const auto& r : records) {
    json ranks = json::object();
    for (const ChannelKind c : kAllChannels) {
      ranks[std::string(channel_name(c))] = json{{"k_inter", r.k_inter[channel_index(c)]},
                                                 {"k_intra", r.k_intra[channel_index(c)]}};
    }
    events.push_back(json{{"event_id", r.source_event_id},
                          {"source_event_id", r.source_event_id},
                          {"ranks", std::move(ranks)},
                          {"inter_model", r.inter_model},
                          {"intra_model", r.intra_model},
                          {"fit_seed", r.fit_seed},
                          {"sample_seed", r.sample_seed},
                          {"min_factor_distance", r.min_factor_distance}});
  }
  return json{{"master_seed", config.master_seed},
              {"ranks", json{{"k_inter", config.ranks.k_inter}, {"k_intra", config.ranks.k_intra}}},
              {"models", to_json(config.models)},
              {"noise", to_json(config.noise)},
              {"n_pmu", config.n_pmu},
              {"events", std::move(events)}};
}

void export_synthetic(const SyntheticDataset& synth, const std::filesystem::path& root) {
  io::export_dataset(synth.dataset, root, synth.provenance_json());
}

}  // namespace pmuforge::synthesis
