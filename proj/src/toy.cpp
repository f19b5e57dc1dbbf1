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

#include "pmuforge/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pmuforge/errors.hpp"
#include "pmuforge/kernels.hpp"

namespace pmuforge::toy {

using nlohmann::json;

std::string_view kind_name(SignatureKind kind) {
  switch (kind) {
    case SignatureKind::Step:
      return "step";
    case SignatureKind::DampedSinusoid:
      return "damped_sinusoid";
    case SignatureKind::Ramp:
      return "ramp";
    case SignatureKind::Composite:
      return "composite";
  }
  return "step";
}

SignatureKind parse_kind(std::string_view name) {
  if (name == "step") return SignatureKind::Step;
  if (name == "damped_sinusoid") return SignatureKind::DampedSinusoid;
  if (name == "ramp") return SignatureKind::Ramp;
  if (name == "composite") return SignatureKind::Composite;
  throw ValidationError("unknown signature kind '" + std::string(name) + "'");
}

double signature_value(SignatureKind kind, double t, const SignatureParams& p) {
  const double tau = t - static_cast<double>(p.onset);
  if (tau < 0.0) return 0.0;
  const double ramp_len = static_cast<double>(std::max<Index>(p.ramp_duration, 1));
  switch (kind) {
    case SignatureKind::Step:
      return 1.0;
    case SignatureKind::Ramp:
      return std::min(1.0, tau / ramp_len);
    case SignatureKind::DampedSinusoid:
      return std::exp(-p.damping * tau) * std::sin(2.0 * std::numbers::pi * p.frequency * tau);
    case SignatureKind::Composite: {
      const double step = p.recovery_tau > 0.0 ? std::exp(-tau / p.recovery_tau) : 1.0;
      return p.step_level * step + p.ramp_level * std::min(1.0, tau / ramp_len);
    }
  }
  throw ValidationError("unknown signature kind");
}

Vector make_signature(SignatureKind kind, Index length, const SignatureParams& params) {
  if (length < 2) throw ValidationError("signature length must be >= 2");
  Vector v(length);
  for (Index t = 0; t < length; ++t) v(t) = signature_value(kind, static_cast<double>(t), params);
  const double norm = v.norm();
  if (!(norm > 0.0)) {
    throw ValidationError("signature '" + std::string(kind_name(kind)) +
                          "' is identically zero over the window (onset " + std::to_string(params.onset) + ")");
  }
  return v / norm;
}

double FactorDistribution::draw(Rng& rng) const {
  if (family == FactorFamily::Uniform) return mean + spread * (2.0 * uniform_open(rng) - 1.0);
  return mean + spread * standard_normal(rng);
}

Index PlantedSpec::n_events() const {
  Index n = 0;
  for (const auto& c : classes) n += c.n_events;
  return n;
}

void PlantedSpec::validate() const {
  if (length < 2) throw ValidationError("toy spec: length must be >= 2");
  if (event_index < 0 || event_index >= length) throw ValidationError("toy spec: event_index outside window");
  if (n_pmu < 1) throw ValidationError("toy spec: n_pmu must be >= 1");
  if (pmu_pool != 0 && pmu_pool < n_pmu) throw ValidationError("toy spec: pmu_pool smaller than n_pmu");
  if (!(noise_sigma >= 0.0)) throw ValidationError("toy spec: noise_sigma must be >= 0");
  if (!(missing_probability >= 0.0 && missing_probability <= 1.0)) {
    throw ValidationError("toy spec: missing_probability must lie in [0, 1]");
  }
  if (classes.empty()) throw ValidationError("toy spec: no event classes");
  for (const auto& cls : classes) {
    if (cls.n_events < 0) throw ValidationError("toy spec: negative n_events");
    make_label(cls.cls, cls.cause);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const auto k = static_cast<Index>(cls.channels[c].size());
      if (n_pmu < k) {
        throw ValidationError("toy spec: n_pmu (" + std::to_string(n_pmu) + ") is smaller than the " +
                              std::to_string(k) + " signatures planted on channel " +
                              std::string(channel_name(kAllChannels[c])) +
                              "; factors would be underdetermined");
      }
      if (k >= length) throw ValidationError("toy spec: more signatures than window samples allow");
    }
  }
}

Matrix orthonormalize_signatures(const Matrix& raw_rows) {
  Matrix centered = raw_rows;
  for (Index i = 0; i < centered.rows(); ++i) centered.row(i).array() -= centered.row(i).mean();
  const auto qr = linalg::orthonormalize_rows(centered, 1e-10);
  if (!qr.dependent.empty()) {
    throw ValidationError("planted signature " + std::to_string(qr.dependent.front()) +
                          " is linearly dependent on earlier signatures or the constant vector");
  }
  return qr.q;
}

Matrix plant_channel(const Matrix& signatures, const Matrix& factors, double noise_sigma, Rng& rng) {
  Matrix x = linalg::expand_rows(factors, signatures);
  if (noise_sigma > 0.0) {
    for (Index i = 0; i < x.rows(); ++i) {
      for (Index t = 0; t < x.cols(); ++t) x(i, t) += noise_sigma * standard_normal(rng);
    }
  }
  return x;
}

Matrix draw_factors(const std::vector<FactorDistribution>& dists, Index n, Rng& rng) {
  Matrix p(n, static_cast<Index>(dists.size()));
  for (Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dists.size(); ++j) p(i, static_cast<Index>(j)) = dists[j].draw(rng);
  }
  return p;
}

namespace {

SignatureParams jittered(const SignatureParams& base, double jitter, Rng& rng) {
  if (jitter <= 0.0) return base;
  auto scale = [&] { return 1.0 + jitter * (2.0 * uniform_open(rng) - 1.0); };
  SignatureParams p = base;
  p.frequency *= scale();
  p.damping *= scale();
  p.recovery_tau *= scale();
  p.ramp_duration = std::max<Index>(1, static_cast<Index>(std::lround(static_cast<double>(p.ramp_duration) * scale())));
  return p;
}

std::string pmu_name(Index i) {
  std::string s = std::to_string(i);
  if (s.size() < 3) s.insert(0, 3 - s.size(), '0');
  return "pmu-" + s;
}

std::string event_name(Index i) {
  std::string s = std::to_string(i);
  if (s.size() < 4) s.insert(0, 4 - s.size(), '0');
  return "toy-" + s;
}

// Projects the unshared factor columns off the span of the shared ones and
// restores their norms.
void decorrelate_unshared(Matrix& factors, Index n_shared) {
  const Index k = factors.cols();
  if (n_shared == 0 || n_shared == k) return;
  const Eigen::MatrixXd shared = factors.leftCols(n_shared);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(shared);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(shared.rows(), n_shared);
  for (Index j = n_shared; j < k; ++j) {
    const double norm = factors.col(j).norm();
    Eigen::VectorXd v = factors.col(j);
    for (int pass = 0; pass < 2; ++pass) v -= q * (q.transpose() * v);
    if (v.norm() > 0.0) factors.col(j) = v * (norm / v.norm());
  }
}

}  // namespace

PlantedDataset plant_dataset(const PlantedSpec& spec) {
  spec.validate();
  PlantedDataset out;
  out.dataset.provenance = Provenance::Toy;
  const Index pool = spec.pmu_pool == 0 ? spec.n_pmu : spec.pmu_pool;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Index event_counter = 0;
  for (const auto& cls : spec.classes) {
    for (Index e = 0; e < cls.n_events; ++e, ++event_counter) {
      const std::uint64_t event_seed = derive_seed(spec.seed, "toy-event", static_cast<std::uint64_t>(event_counter));
      Rng jitter_rng(derive_seed(event_seed, "jitter"));
      Rng pmu_rng(derive_seed(event_seed, "pmus"));
      Rng factor_rng(derive_seed(event_seed, "factors"));
      Rng missing_rng(derive_seed(event_seed, "missing"));
      PlantedEvent truth;
      truth.noise_seed = derive_seed(event_seed, "noise");
      Rng noise_rng(truth.noise_seed);

      std::vector<Index> chosen(static_cast<std::size_t>(pool));
      std::iota(chosen.begin(), chosen.end(), Index{0});
      if (pool > spec.n_pmu) {
        for (Index i = 0; i < spec.n_pmu; ++i) {
          std::uniform_int_distribution<Index> pick(i, pool - 1);
          std::swap(chosen[static_cast<std::size_t>(i)], chosen[static_cast<std::size_t>(pick(pmu_rng))]);
        }
        chosen.resize(static_cast<std::size_t>(spec.n_pmu));
        std::sort(chosen.begin(), chosen.end());
      }
      std::vector<std::string> ids;
      for (const Index i : chosen) ids.push_back(pmu_name(i));

      std::array<Matrix, kChannelCount> channels;
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        const auto& sigs = cls.channels[c];
        const auto k = static_cast<Index>(sigs.size());
        PlantedChannel& pc = truth.channels[c];
        if (k == 0) {
          pc.signatures.resize(0, spec.length);
          pc.factors.resize(spec.n_pmu, 0);
          channels[c] = Matrix::Zero(spec.n_pmu, spec.length);
          if (spec.noise_sigma > 0.0) channels[c] = plant_channel(pc.signatures, pc.factors, spec.noise_sigma, noise_rng);
          continue;
        }
        // shared rows first so their orthonormalized form is identical in every event
        std::vector<const PlantedSignature*> ordered;
        for (const auto& s : sigs) if (s.shared) ordered.push_back(&s);
        pc.n_shared = static_cast<Index>(ordered.size());
        for (const auto& s : sigs) if (!s.shared) ordered.push_back(&s);
        Matrix raw(k, spec.length);
        std::vector<FactorDistribution> dists;
        for (Index j = 0; j < k; ++j) {
          const PlantedSignature& s = *ordered[static_cast<std::size_t>(j)];
          const SignatureParams params = s.shared ? s.params : jittered(s.params, s.jitter, jitter_rng);
          raw.row(j) = make_signature(s.kind, spec.length, params).transpose();
          dists.push_back(s.factor);
        }
        pc.signatures = orthonormalize_signatures(raw);
        pc.factors = draw_factors(dists, spec.n_pmu, factor_rng);
        if (spec.decorrelate_factors) decorrelate_unshared(pc.factors, pc.n_shared);
        channels[c] = plant_channel(pc.signatures, pc.factors, spec.noise_sigma, noise_rng);
      }

      EventTensor ev = EventTensor::from_channels(event_name(event_counter), make_label(cls.cls, cls.cause), ids,
                                                  std::move(channels), spec.event_index);
      if (spec.missing_probability > 0.0) {
        for (Index i = 0; i < spec.n_pmu; ++i) {
          if (uniform_open(missing_rng) >= spec.missing_probability) continue;
          const Index span = 1 + static_cast<Index>(uniform_open(missing_rng) * 30.0);
          const Index start = static_cast<Index>(uniform_open(missing_rng) * static_cast<double>(spec.length - span));
          for (std::size_t c = 0; c < kChannelCount; ++c) {
            for (Index t = start; t < start + span && t < spec.length; ++t) {
              ev.mask[c](i, t) = false;
              ev.data[c](i, t) = nan;
            }
          }
        }
      }
      out.dataset.events.push_back(std::move(ev));
      out.truth.events.push_back(std::move(truth));
    }
  }
  return out;
}

namespace {

json params_to_json(const SignatureParams& p) {
  return json{{"onset", p.onset},           {"frequency", p.frequency},       {"damping", p.damping},
              {"ramp_duration", p.ramp_duration}, {"recovery_tau", p.recovery_tau}, {"step_level", p.step_level},
              {"ramp_level", p.ramp_level}};
}

SignatureParams params_from_json(const json& j, Index default_onset) {
  SignatureParams p;
  p.onset = j.value("onset", default_onset);
  p.frequency = j.value("frequency", p.frequency);
  p.damping = j.value("damping", p.damping);
  p.ramp_duration = j.value("ramp_duration", p.ramp_duration);
  p.recovery_tau = j.value("recovery_tau", p.recovery_tau);
  p.step_level = j.value("step_level", p.step_level);
  p.ramp_level = j.value("ramp_level", p.ramp_level);
  return p;
}

FactorFamily parse_family(const std::string& s) {
  if (s == "normal") return FactorFamily::Normal;
  if (s == "uniform") return FactorFamily::Uniform;
  throw ValidationError("unknown factor family '" + s + "'");
}

}  // namespace

PlantedSpec planted_spec_from_json(const json& doc) {
  try {
    PlantedSpec spec;
    spec.length = doc.value("length", spec.length);
    spec.event_index = doc.value("event_index", spec.event_index);
    spec.n_pmu = doc.value("n_pmu", spec.n_pmu);
    spec.pmu_pool = doc.value("pmu_pool", spec.pmu_pool);
    spec.noise_sigma = doc.value("noise_sigma", spec.noise_sigma);
    spec.missing_probability = doc.value("missing_probability", spec.missing_probability);
    spec.decorrelate_factors = doc.value("decorrelate_factors", spec.decorrelate_factors);
    spec.seed = doc.value("seed", spec.seed);
    for (const auto& jc : doc.at("classes")) {
      PlantedClass cls;
      cls.cls = parse_class(jc.at("class").get<std::string>());
      if (jc.contains("cause") && !jc.at("cause").is_null()) cls.cause = parse_cause(jc.at("cause").get<std::string>());
      cls.n_events = jc.value("n_events", Index{1});
      const json& chans = jc.at("channels");
      for (const auto& [name, list] : chans.items()) {
        const std::size_t c = channel_index(parse_channel(name));
        for (const auto& js : list) {
          PlantedSignature s;
          s.kind = parse_kind(js.at("kind").get<std::string>());
          s.params = params_from_json(js.value("params", json::object()), spec.event_index);
          s.shared = js.value("shared", true);
          s.jitter = js.value("jitter", 0.0);
          const json f = js.value("factor", json::object());
          s.factor.family = parse_family(f.value("family", std::string("normal")));
          s.factor.mean = f.value("mean", 0.0);
          s.factor.spread = f.value("spread", 1.0);
          cls.channels[c].push_back(s);
        }
      }
      spec.classes.push_back(std::move(cls));
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("toy spec: ") + e.what());
  }
}

json to_json(const PlantedSpec& spec) {
  json classes = json::array();
  for (const auto& cls : spec.classes) {
    json chans = json::object();
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      json list = json::array();
      for (const auto& s : cls.channels[c]) {
        list.push_back({{"kind", kind_name(s.kind)},
                        {"params", params_to_json(s.params)},
                        {"shared", s.shared},
                        {"jitter", s.jitter},
                        {"factor",
                         {{"family", s.factor.family == FactorFamily::Normal ? "normal" : "uniform"},
                          {"mean", s.factor.mean},
                          {"spread", s.factor.spread}}}});
      }
      chans[std::string(channel_name(kAllChannels[c]))] = list;
    }
    classes.push_back({{"class", class_name(cls.cls)},
                       {"cause", cls.cause ? json(cause_name(*cls.cause)) : json(nullptr)},
                       {"n_events", cls.n_events},
                       {"channels", chans}});
  }
  return json{{"length", spec.length},
              {"event_index", spec.event_index},
              {"n_pmu", spec.n_pmu},
              {"pmu_pool", spec.pmu_pool},
              {"noise_sigma", spec.noise_sigma},
              {"missing_probability", spec.missing_probability},
              {"decorrelate_factors", spec.decorrelate_factors},
              {"seed", spec.seed},
              {"classes", classes}};
}

PlantedSpec default_toy_spec(Index n_voltage, Index n_frequency, Index n_pmu, std::uint64_t seed) {
  PlantedSpec spec;
  spec.n_pmu = n_pmu;
  spec.pmu_pool = n_pmu + n_pmu / 2;
  spec.noise_sigma = 0.01;
  spec.missing_probability = 0.05;
  spec.seed = seed;

  auto sig = [](SignatureKind kind, SignatureParams p, double mean, double spread, bool shared = true,
                double jitter = 0.0) {
    PlantedSignature s;
    s.kind = kind;
    s.params = p;
    s.factor = {FactorFamily::Normal, mean, spread};
    s.shared = shared;
    s.jitter = jitter;
    return s;
  };
  const auto ch = [](ChannelKind c) { return channel_index(c); };

  SignatureParams dip;  // voltage dip with fast recovery
  dip.recovery_tau = 25.0;
  SignatureParams slow_dip = dip;
  slow_dip.recovery_tau = 45.0;
  SignatureParams oscillation;
  oscillation.frequency = 0.03;
  oscillation.damping = 0.02;
  SignatureParams inter_area;
  inter_area.frequency = 0.02;
  inter_area.damping = 0.01;
  SignatureParams freq_drop;  // step plus ramp, no recovery
  freq_drop.step_level = 0.5;
  freq_drop.ramp_level = 0.5;
  freq_drop.ramp_duration = 90;
  SignatureParams ramp;
  ramp.ramp_duration = 150;

  PlantedClass voltage;
  voltage.cls = EventClass::Voltage;
  voltage.cause = Cause::LineTrip;
  voltage.n_events = n_voltage;
  voltage.channels[ch(ChannelKind::RealPower)] = {
      sig(SignatureKind::Composite, dip, 0.3, 1.0),
      sig(SignatureKind::DampedSinusoid, oscillation, 0.0, 0.5, false, 0.3)};
  voltage.channels[ch(ChannelKind::ReactivePower)] = {sig(SignatureKind::Composite, slow_dip, 0.5, 1.0)};
  voltage.channels[ch(ChannelKind::VoltageMagnitude)] = {
      sig(SignatureKind::Composite, dip, -1.0, 0.5),
      sig(SignatureKind::Composite, slow_dip, 0.0, 0.3, false, 0.4)};
  voltage.channels[ch(ChannelKind::Frequency)] = {sig(SignatureKind::DampedSinusoid, inter_area, 0.2, 0.5)};

  PlantedClass frequency;
  frequency.cls = EventClass::Frequency;
  frequency.cause = Cause::GeneratorTrip;
  frequency.n_events = n_frequency;
  SignatureParams slow_osc = inter_area;
  slow_osc.frequency = 0.015;
  frequency.channels[ch(ChannelKind::RealPower)] = {
      sig(SignatureKind::Step, {}, 0.5, 1.0),
      sig(SignatureKind::DampedSinusoid, slow_osc, 0.0, 0.5, false, 0.3)};
  frequency.channels[ch(ChannelKind::ReactivePower)] = {sig(SignatureKind::DampedSinusoid, inter_area, 0.0, 1.0)};
  SignatureParams v_sag = freq_drop;
  v_sag.ramp_duration = 120;
  frequency.channels[ch(ChannelKind::VoltageMagnitude)] = {sig(SignatureKind::Composite, v_sag, 0.2, 0.8)};
  frequency.channels[ch(ChannelKind::Frequency)] = {
      sig(SignatureKind::Composite, freq_drop, -1.0, 0.3),
      sig(SignatureKind::Ramp, ramp, 0.0, 0.3, false, 0.3)};

  spec.classes = {voltage, frequency};
  return spec;
}

}  // namespace pmuforge::toy
