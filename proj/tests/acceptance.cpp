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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "pmuforge/adversarial.hpp"
#include "pmuforge/audit.hpp"
#include "pmuforge/config.hpp"
#include "pmuforge/ep.hpp"
#include "pmuforge/factor_model.hpp"
#include "pmuforge/io.hpp"
#include "pmuforge/pipeline.hpp"
#include "pmuforge/quantile.hpp"
#include "pmuforge/scoring.hpp"
#include "pmuforge/toy.hpp"
#include "test_util.hpp"

namespace pmuforge {
namespace {

namespace fs = std::filesystem;
using testing::random_matrix;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- recovery

toy::PlantedSpec recovery_spec(std::uint64_t seed, double noise) {
  toy::PlantedSpec spec;
  spec.n_pmu = 40;
  spec.noise_sigma = noise;
  spec.decorrelate_factors = true;
  spec.seed = seed;
  const auto normal = [](double sd) { return toy::FactorDistribution{toy::FactorFamily::Normal, 0.0, sd}; };
  for (const EventClass cls : {EventClass::Voltage, EventClass::Frequency}) {
    toy::PlantedClass pc;
    pc.cls = cls;
    pc.n_events = 6;
    toy::SignatureParams osc;
    osc.frequency = cls == EventClass::Voltage ? 0.02 : 0.031;
    osc.damping = 0.004;
    toy::SignatureParams ramp;
    ramp.ramp_duration = cls == EventClass::Voltage ? 60 : 120;
    toy::SignatureParams local;
    local.frequency = 0.045;
    local.damping = 0.01;
    for (auto& ch : pc.channels) {
      ch.push_back({toy::SignatureKind::Step, {}, normal(4.0), true, 0.0});
      ch.push_back({toy::SignatureKind::DampedSinusoid, osc, normal(4.0), true, 0.0});
      ch.push_back({toy::SignatureKind::Ramp, ramp, normal(2.5), false, 0.3});
      ch.push_back({toy::SignatureKind::DampedSinusoid, local, normal(2.5), false, 0.3});
    }
    spec.classes.push_back(pc);
  }
  return spec;
}

Matrix rows(const Matrix& m, Index first, Index count) { return m.middleRows(first, count); }

Outcome subspace_recovery() {
  const auto t0 = Clock::now();
  double worst_clean = 0.0;
  double worst_noisy = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    for (const double noise : {0.0, 0.01}) {
      const toy::PlantedDataset planted = toy::plant_dataset(recovery_spec(100 + s, noise));
      double& worst = noise == 0.0 ? worst_clean : worst_noisy;
      for (const ChannelKind c : kAllChannels) {
        const auto split = ep::split_inter_intra(planted.dataset, c, 2, 2);
        for (std::size_t e = 0; e < planted.dataset.events.size(); ++e) {
          const toy::PlantedChannel& truth = planted.truth.events[e].channels[channel_index(c)];
          const ep::ChannelDecomposition full = ep::decompose_event(planted.dataset.events[e], c, 4);
          worst = std::max(worst, linalg::max_principal_angle(truth.signatures, full.signatures.basis));
          const Matrix& basis = split[e].signatures.basis;
          worst = std::max(worst, linalg::max_principal_angle(rows(truth.signatures, 0, 2), rows(basis, 0, 2)));
          worst = std::max(worst, linalg::max_principal_angle(rows(truth.signatures, 2, 2), rows(basis, 2, 2)));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst_clean < 1e-6 && worst_noisy < 0.05 && secs < 10.0,
          fmt("%d seeds, max angle %.2e rad (noise 0, < 1e-6), %.4f rad (noise 0.01, < 0.05), %.2f s (< 10)", seeds,
              worst_clean, worst_noisy, secs)};
}

// ---------------------------------------------------------------- QR

Outcome qr_reintegration() {
  Rng rng(2024);
  double worst_err = 0.0;
  double worst_defect = 0.0;
  std::uniform_int_distribution<Index> width(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 20;
    std::vector<ep::SignatureSet> blocks;
    std::vector<Matrix> parts;
    Matrix product = Matrix::Zero(n, 600);
    for (const ep::BlockLabel label : {ep::BlockLabel::Inter, ep::BlockLabel::Intra}) {
      const Index k = width(rng);
      ep::SignatureSet set;
      set.basis = linalg::orthonormalize_rows(random_matrix(k, 600, rng), 1e-10).q;
      set.labels.assign(static_cast<std::size_t>(k), label);
      const Matrix p = random_matrix(n, k, rng);
      product += p * set.basis;
      blocks.push_back(set);
      parts.push_back(p);
    }
    const ep::Reintegration r = ep::qr_reintegrate(blocks, parts);
    worst_err = std::max(worst_err, (r.participation * r.signatures.basis - product).norm() / product.norm());
    worst_defect = std::max(worst_defect, linalg::orthonormality_defect(r.signatures.basis));
  }
  return {worst_err < 1e-10 && worst_defect < 1e-10,
          fmt("100 pairs, max relative error %.2e, max orthonormality defect %.2e (both < 1e-10)", worst_err,
              worst_defect)};
}

// ---------------------------------------------------------------- EM

Outcome em_monotone() {
  double worst_drop = 0.0;
  std::size_t iterations = 0;
  for (int fit = 0; fit < 50; ++fit) {
    Rng rng(7000 + fit);
    const Index dim = 1 + fit % 4;
    const Index n = 60 + 20 * (fit % 7);
    const Index clusters = 1 + fit % 3;
    Matrix x(n, dim);
    for (Index i = 0; i < n; ++i) {
      const double centre = 3.0 * static_cast<double>(i % clusters);
      for (Index d = 0; d < dim; ++d) x(i, d) = centre + (0.3 + 0.2 * d) * standard_normal(rng);
    }
    models::GmmConfig cfg;
    cfg.components = 1 + fit % 4;
    cfg.seed = static_cast<std::uint64_t>(fit);
    const auto m = models::fit_gmm(x, cfg);
    const auto& trace = std::get<models::GmmParams>(m.params).log_likelihood_trace;
    iterations += trace.size();
    for (std::size_t i = 1; i < trace.size(); ++i) worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
  }
  return {worst_drop <= 1e-9,
          fmt("50 fits, %zu iterations, largest decrease %.2e (<= 1e-9)", iterations, worst_drop)};
}

// ---------------------------------------------------------------- copula

std::vector<double> sorted_column(const Matrix& m, Index j) {
  std::vector<double> v(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m(i, j);
  std::sort(v.begin(), v.end());
  return v;
}

// One copula per (class, channel) factor block of the default toy, each fitted
// on 10000 rows drawn from the planted factor distributions.
Outcome copula_fidelity() {
  double worst = 0.0;
  int dims = 0;
  const auto levels = default_quantile_levels();
  const toy::PlantedSpec spec = toy::default_toy_spec();
  Rng rng(404);
  std::uint64_t block = 0;
  for (const auto& cls : spec.classes) {
    for (const auto& sigs : cls.channels) {
      if (sigs.empty()) continue;
      std::vector<toy::FactorDistribution> dists;
      for (const auto& s : sigs) dists.push_back(s.factor);
      const Matrix x = toy::draw_factors(dists, 10000, rng);
      const Matrix draw = models::sample(models::fit_copula(x), 10000, block++);
      for (Index j = 0; j < x.cols(); ++j, ++dims) {
        const auto train = sorted_column(x, j);
        const auto synth = sorted_column(draw, j);
        for (const double l : levels) {
          worst = std::max(worst, std::abs(empirical_quantile(train, l) - empirical_quantile(synth, l)));
        }
      }
    }
  }
  return {worst <= 0.05, fmt("%d toy factor dimensions, 19 levels, 10000 draws: max gap %.4f (<= 0.05)", dims, worst)};
}

// ---------------------------------------------------------------- adversarial

template <class F>
Vector finite_difference(Vector& params, F&& loss) {
  const double h = 1e-6;
  Vector g(params.size());
  for (Index i = 0; i < params.size(); ++i) {
    const double keep = params(i);
    params(i) = keep + h;
    const double up = loss();
    params(i) = keep - h;
    const double dn = loss();
    params(i) = keep;
    g(i) = (up - dn) / (2 * h);
  }
  return g;
}

double relative_error(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

Outcome adversarial_trainer() {
  using adversarial::Mlp;
  Rng rng(55);
  std::uniform_int_distribution<Index> small(1, 4);
  double worst = 0.0;
  int nets = 0;
  while (nets < 40) {
    const Index dim = small(rng), noise_dim = small(rng), hg = small(rng), hd = small(rng);
    const Index ng = Mlp::parameter_count(noise_dim, hg, dim);
    const Index nd = Mlp::parameter_count(dim, hd, 1);
    if (ng < 5 || ng > 50 || nd < 5 || nd > 50) continue;
    ++nets;
    Mlp gen = Mlp::create(noise_dim, hg, dim);
    Mlp disc = Mlp::create(dim, hd, 1);
    gen.initialize(rng);
    disc.initialize(rng);
    for (Index i = 0; i < gen.params.size(); ++i) gen.params(i) += 0.1 * standard_normal(rng);
    for (Index i = 0; i < disc.params.size(); ++i) disc.params(i) += 0.1 * standard_normal(rng);
    const Matrix noise = random_matrix(25, noise_dim, rng);
    const Matrix real = random_matrix(31, dim, rng);
    adversarial::LossSettings s;
    s.levels = default_quantile_levels();
    Vector grad;
    generator_loss(gen, disc, noise, real, s, &grad);
    worst = std::max(worst, relative_error(grad, finite_difference(gen.params, [&] {
                                             return generator_loss(gen, disc, noise, real, s, nullptr).total();
                                           })));
    const Matrix fake = gen.forward(noise);
    discriminator_loss(disc, real, fake, s.l2, &grad);
    worst = std::max(worst, relative_error(grad, finite_difference(disc.params, [&] {
                                             return discriminator_loss(disc, real, fake, s.l2, nullptr);
                                           })));
  }

  const auto t0 = Clock::now();
  Rng data_rng(4);
  const Index n = 2000;
  Matrix x(n, 1);
  for (Index i = 0; i < n; ++i) x(i, 0) = 1.5 + 0.8 * standard_normal(data_rng);
  models::AdversarialConfig cfg;  // 500 epochs, batch 50, lr 1e-3 / 1e-5, l2 0.25
  cfg.seed = 9;
  const auto m = models::fit_adversarial(x, cfg);
  const Matrix draw = models::sample(m, 10000, 1);
  const double mean = draw.mean();
  const double sd = std::sqrt((draw.array() - mean).square().mean());
  const double secs = seconds_since(t0);
  const double mean_err = std::abs(mean - 1.5);
  const double sd_err = std::abs(sd - 0.8);
  return {worst < 1e-4 && mean_err < 0.1 && sd_err < 0.15 && secs < 60.0,
          fmt("%d nets, max gradient error %.2e (< 1e-4); N(1.5, 0.8) fit: mean error %.3f (< 0.1), std error "
              "%.3f (< 0.15), %.1f s (< 60)",
              nets, worst, mean_err, sd_err, secs)};
}

// ---------------------------------------------------------------- quantile loss

Outcome quantile_loss_properties() {
  const auto levels = default_quantile_levels();
  Rng rng(77);
  double identity = 0.0;
  double shift_err = 0.0;
  double violation = 0.0;
  for (int pair = 0; pair < 1000; ++pair) {
    const Index d = 1 + pair % 3;
    std::uniform_int_distribution<Index> rows_dist(2, 40);
    const Matrix a = random_matrix(rows_dist(rng), d, rng);
    const Matrix b = (random_matrix(rows_dist(rng), d, rng).array() * 2.0 + 0.3).matrix();
    const Matrix c = random_matrix(rows_dist(rng), d, rng);
    identity = std::max(identity, std::abs(quantile_loss(a, a, levels)));
    const double shift = 4.0 * (uniform_open(rng) - 0.5);
    shift_err = std::max(shift_err, std::abs(quantile_loss(a, (a.array() + shift).matrix(), levels) - std::abs(shift)));
    const double ab = quantile_loss(a, b, levels);
    const double ba = quantile_loss(b, a, levels);
    const double ac = quantile_loss(a, c, levels);
    const double cb = quantile_loss(c, b, levels);
    violation = std::max({violation, std::abs(ab - ba), -ab, ab - (ac + cb)});
  }
  return {identity == 0.0 && shift_err < 1e-12 && violation <= 1e-12,
          fmt("1000 pairs: identity %.1e, shift error %.1e, symmetry/non-negativity/triangle violation %.1e",
              identity, shift_err, violation)};
}

// ---------------------------------------------------------------- audit

EventTensor standardized_random_event(const std::string& id, Rng& rng) {
  return standardize(testing::event_from(id, EventClass::Voltage, testing::random_channels(20, 600, rng))).event;
}

Outcome audit_correctness() {
  Rng rng(88);
  double self_err = 0.0;
  double orth_err = 0.0;
  double random_max = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const EventTensor a = standardized_random_event("a", rng);
    const EventTensor b = standardized_random_event("b", rng);
    self_err = std::max(self_err, std::abs(audit::tensor_correlation(a, a) - 1.0));
    random_max = std::max(random_max, std::abs(audit::tensor_correlation(a, b)));
    // remove the component along a
    EventTensor o = b;
    double ab = 0.0, aa = 0.0;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      ab += a.data[c].cwiseProduct(b.data[c]).sum();
      aa += a.data[c].squaredNorm();
    }
    for (std::size_t c = 0; c < kChannelCount; ++c) o.data[c] = b.data[c] - (ab / aa) * a.data[c];
    double ao = 0.0;
    for (std::size_t c = 0; c < kChannelCount; ++c) ao += a.data[c].cwiseProduct(o.data[c]).sum();
    for (std::size_t c = 0; c < kChannelCount; ++c) o.data[c] -= (ao / aa) * a.data[c];
    orth_err = std::max(orth_err, std::abs(audit::tensor_correlation(a, o)));
  }
  const audit::AuditConfig defaults;
  const bool thresholds = defaults.event_threshold == 0.25 && defaults.pmu_threshold == 0.21;
  return {self_err <= 1e-12 && orth_err <= 1e-12 && random_max < 0.05 && thresholds,
          fmt("self |corr-1| %.1e, orthogonal |corr| %.1e (<= 1e-12); 100 random 48000-entry pairs max |corr| "
              "%.4f (< 0.05); thresholds %.2f/%.2f",
              self_err, orth_err, random_max, defaults.event_threshold, defaults.pmu_threshold)};
}

// ---------------------------------------------------------------- metrics

Outcome metric_oracle() {
  // Events whose frequency step sign decides the prediction of a one-feature
  // classifier: + predicts frequency.
  Dataset d;
  const struct {
    EventClass cls;
    double step;
  } cases[] = {{EventClass::Frequency, 1},  {EventClass::Frequency, 1},  {EventClass::Frequency, -1},
               {EventClass::Voltage, 1},    {EventClass::Voltage, -1},   {EventClass::Voltage, -1},
               {EventClass::Voltage, -1},   {EventClass::Voltage, -1},   {EventClass::Voltage, -1},
               {EventClass::Voltage, -1}};
  int i = 0;
  for (const auto& c : cases) {
    std::array<Matrix, kChannelCount> ch;
    for (auto& m : ch) m = Matrix::Zero(3, 600);
    ch[channel_index(ChannelKind::Frequency)].rightCols(300).setConstant(c.step);
    d.events.push_back(testing::event_from("e" + std::to_string(i++), c.cls, ch));
  }
  scoring::Classifier clf;
  clf.feature_mean = Vector::Zero(scoring::kFeatureCount);
  clf.feature_scale = Vector::Ones(scoring::kFeatureCount);
  clf.weights = Vector::Zero(scoring::kFeatureCount);
  clf.weights(static_cast<Index>(channel_index(ChannelKind::Frequency)) * scoring::kFeaturesPerChannel + 4) = 1.0;
  const scoring::Metrics m = scoring::evaluate(clf, d);
  const scoring::Metrics h = scoring::Metrics::from_counts(3, 0, 0, 7);
  const scoring::Metrics z = scoring::Metrics::from_counts(0, 0, 2, 8);
  const bool ok = m.tp == 2 && m.fp == 1 && m.fn == 1 && m.tn == 6 && m.accuracy == 0.8 && m.f1 == 2.0 / 3.0 &&
                  m.f2 == 2.0 / 3.0 && h.accuracy == 1.0 && h.f1 == 1.0 && h.f2 == 1.0 && z.f1 == 0.0 &&
                  z.accuracy == 0.8;
  return {ok, fmt("TP=%zu FP=%zu FN=%zu TN=%zu: accuracy %.17g, F1 %.17g, F2 %.17g", m.tp, m.fp, m.fn, m.tn,
                  m.accuracy, m.f1, m.f2)};
}

// ---------------------------------------------------------------- pipeline

std::map<std::string, std::string> report_files(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).string();
    if (rel != "run_meta.json") files[rel] = io::read_text_file(e.path());
  }
  return files;
}

struct PipelineRuns {
  pipeline::RunSummary first;
  std::map<std::string, std::string> first_files;
  std::map<std::string, std::string> second_files;
};

PipelineRuns run_twice() {
  PipelineConfig cfg = load_config(fs::path(PMUFORGE_SOURCE_DIR) / "configs" / "toy.json");
  cfg.output = testing::scratch_dir("acceptance_pipeline") / "run";
  PipelineRuns r;
  r.first = pipeline::run_pipeline(cfg);
  r.first_files = report_files(cfg.output);
  fs::remove_all(cfg.output);
  pipeline::run_pipeline(cfg);
  r.second_files = report_files(cfg.output);
  return r;
}

Outcome protocol_echo(const PipelineRuns& r) {
  const auto& t = r.first.scores;
  double min_f1 = 1.0;
  for (const auto& m : t.rows) min_f1 = std::min(min_f1, m.f1);
  const double gap = std::max(t.synthetic_gap(), t.measured_gap());
  return {r.first.events == 160 && r.first.seconds < 300.0 && gap < 0.07 && min_f1 >= 0.8,
          fmt("%zu events in %.1f s (< 300); accuracy drop syn %.3f, meas %.3f (< 0.07); min F1 %.3f (>= 0.8)",
              r.first.events, r.first.seconds, t.synthetic_gap(), t.measured_gap(), min_f1)};
}

Outcome determinism(const PipelineRuns& r) {
  std::size_t differing = 0;
  for (const auto& [name, text] : r.first_files) {
    const auto it = r.second_files.find(name);
    if (it == r.second_files.end() || it->second != text) ++differing;
  }
  const bool same_set = r.first_files.size() == r.second_files.size();
  return {differing == 0 && same_set && r.first_files.count("audit_report.json") == 1,
          fmt("%zu artifacts compared, %zu differ", r.first_files.size(), differing)};
}

// ---------------------------------------------------------------- round trip

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0 || (std::isnan(a) && std::isnan(b)); }

Outcome round_trip() {
  std::size_t values = 0;
  std::size_t masked = 0;
  std::size_t mismatches = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    toy::PlantedSpec spec = toy::default_toy_spec(6 + s, 2 + s % 3, 8 + s, 500 + s);
    spec.pmu_pool = spec.n_pmu + 5;
    spec.missing_probability = 0.2;
    spec.noise_sigma = 0.01 * static_cast<double>(s + 1);
    const Dataset d = toy::plant_dataset(spec).dataset;
    const fs::path dir = testing::scratch_dir("acceptance_roundtrip_" + std::to_string(s));
    io::export_dataset(d, dir);
    const Dataset back = io::ingest_csv(dir);
    if (back.events.size() != d.events.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t e = 0; e < d.events.size(); ++e) {
      const EventTensor& a = d.events[e];
      const EventTensor& b = back.events[e];
      if (a.event_id != b.event_id || !(a.label == b.label) || a.pmu_ids != b.pmu_ids ||
          a.event_start_index != b.event_start_index || a.sample_interval != b.sample_interval ||
          a.n_samples() != b.n_samples()) {
        ++mismatches;
        continue;
      }
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        for (Index i = 0; i < a.data[c].size(); ++i) {
          ++values;
          const bool ma = a.mask[c].data()[i];
          masked += ma ? 0 : 1;
          if (ma != b.mask[c].data()[i] || !bit_equal(a.data[c].data()[i], b.data[c].data()[i])) ++mismatches;
        }
      }
    }
  }
  return {mismatches == 0 && masked > 0,
          fmt("10 datasets, %zu samples (%zu masked), %zu mismatches", values, masked, mismatches)};
}

}  // namespace
}  // namespace pmuforge

int main() {
  using namespace pmuforge;
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("[%s] %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto guarded = [&](int id, const char* name, const std::function<Outcome()>& f) {
    try {
      report(id, name, f());
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("exception: ") + e.what()});
    }
  };
  guarded(1, "subspace recovery", subspace_recovery);
  guarded(2, "QR reintegration", qr_reintegration);
  guarded(3, "EM monotonicity", em_monotone);
  guarded(4, "copula fidelity", copula_fidelity);
  guarded(5, "adversarial trainer", adversarial_trainer);
  guarded(6, "quantile loss", quantile_loss_properties);
  guarded(7, "audit correctness", audit_correctness);
  guarded(8, "metric oracle", metric_oracle);
  std::optional<PipelineRuns> runs;
  try {
    runs = run_twice();
  } catch (const std::exception& e) {
    report(9, "end-to-end protocol echo", {false, std::string("exception: ") + e.what()});
    report(10, "determinism", {false, "pipeline did not run"});
  }
  if (runs) {
    report(9, "end-to-end protocol echo", protocol_echo(*runs));
    report(10, "determinism", determinism(*runs));
  }
  guarded(11, "export/ingest round trip", round_trip);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
