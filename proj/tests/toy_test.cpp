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

#include <cmath>
#include <numbers>

#include "pmuforge/errors.hpp"
#include "pmuforge/toy.hpp"
#include "test_util.hpp"

namespace pmuforge {
namespace {

using namespace toy;

TEST(Signature, StepHasTwoPlateausAndUnitNorm) {
  const Vector v = make_signature(SignatureKind::Step, 600, SignatureParams{});
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  for (Index t = 1; t < 300; ++t) EXPECT_EQ(v(t), v(0));
  for (Index t = 301; t < 600; ++t) EXPECT_EQ(v(t), v(300));
  EXPECT_NE(v(299), v(300));
}

TEST(Signature, UndampedSinusoidHasEqualExtrema) {
  SignatureParams p;
  p.frequency = 0.025;  // quarter period of 10 samples puts extrema on integers
  const Vector v = make_signature(SignatureKind::DampedSinusoid, 600, p);
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  const double first = std::abs(v(310));
  for (Index t = 310; t < 600; t += 20) EXPECT_NEAR(std::abs(v(t)), first, 1e-12);
}

TEST(Signature, DampedExtremaRatio) {
  SignatureParams p;
  p.frequency = 0.02;
  p.damping = 0.01;
  const double w = 2.0 * std::numbers::pi * p.frequency;
  const double half_period = 0.5 / p.frequency;
  // stationary points of exp(-d t) sin(w t): tan(w t) = w / d
  const double t0 = std::atan(w / p.damping) / w;
  for (int n = 0; n < 5; ++n) {
    const double a = signature_value(SignatureKind::DampedSinusoid, 300.0 + t0 + n * half_period, p);
    const double b = signature_value(SignatureKind::DampedSinusoid, 300.0 + t0 + (n + 1) * half_period, p);
    EXPECT_NEAR(std::abs(b) / std::abs(a), std::exp(-p.damping * half_period), 1e-12);
    EXPECT_LT(a * b, 0.0);
  }
}

TEST(Signature, InvalidInputs) {
  EXPECT_THROW(make_signature(SignatureKind::Step, 1, {}), ValidationError);
  SignatureParams late;
  late.onset = 1000;
  EXPECT_THROW(make_signature(SignatureKind::Step, 600, late), ValidationError);
  EXPECT_THROW(parse_kind("sawtooth"), ValidationError);
  for (const auto k : {SignatureKind::Step, SignatureKind::DampedSinusoid, SignatureKind::Ramp, SignatureKind::Composite})
    EXPECT_EQ(parse_kind(kind_name(k)), k);
}

TEST(Plant, RankOneExampleIsExact) {
  Matrix s(1, 4);
  s << 1, 0, -1, 0;
  s /= std::sqrt(2.0);
  Matrix p(2, 1);
  p << 1, 2;
  Rng rng(1);
  const Matrix x = plant_channel(s, p, 0.0, rng);
  Matrix expect(2, 4);
  expect << 1, 0, -1, 0, 2, 0, -2, 0;
  expect /= std::sqrt(2.0);
  EXPECT_EQ(x, expect);
}

TEST(Plant, FactorMeanWithinMonteCarloBound) {
  Rng rng(2026);
  for (const FactorDistribution d : {FactorDistribution{FactorFamily::Normal, 3.0, 2.0},
                                     FactorDistribution{FactorFamily::Uniform, -1.0, 0.5}}) {
    const Matrix f = draw_factors({d}, 10000, rng);
    EXPECT_LE(std::abs(f.mean() - d.mean), 3.0 * d.spread / 100.0);
  }
}

PlantedSpec small_spec(double noise) {
  PlantedSpec spec;
  spec.n_pmu = 6;
  spec.noise_sigma = noise;
  spec.seed = 99;
  PlantedClass cls;
  cls.n_events = 3;
  PlantedSignature a;
  a.kind = SignatureKind::Step;
  PlantedSignature b;
  b.kind = SignatureKind::DampedSinusoid;
  b.params.damping = 0.01;
  b.shared = false;
  b.jitter = 0.1;
  cls.channels[0] = {a, b};
  cls.channels[2] = {a};
  spec.classes.push_back(cls);
  return spec;
}

TEST(Plant, NoiselessChannelRankMatchesSignatureCount) {
  const PlantedDataset d = plant_dataset(small_spec(0.0));
  ASSERT_EQ(d.dataset.events.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    const EventTensor& ev = d.dataset.events[e];
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const auto& truth = d.truth.events[e].channels[c];
      EXPECT_LT(linalg::orthonormality_defect(truth.signatures), 1e-10);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(ev.data[c]);
      const Vector sv = svd.singularValues();
      Index rank = 0;
      for (Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-9 * std::max(1.0, sv(0)) ? 1 : 0;
      EXPECT_EQ(rank, truth.signatures.rows());
      EXPECT_LT((ev.data[c] - truth.factors * truth.signatures).norm(), 1e-12 + 1e-12 * ev.data[c].norm());
    }
  }
  // shared rows identical across events, per-event rows differ
  const auto& c0 = d.truth.events[0].channels[0];
  const auto& c1 = d.truth.events[1].channels[0];
  EXPECT_EQ(c0.n_shared, 1);
  EXPECT_EQ(c0.signatures.row(0), c1.signatures.row(0));
  EXPECT_NE(c0.signatures.row(1), c1.signatures.row(1));
}

TEST(Plant, NoiseMatchesSigma) {
  const PlantedDataset d = plant_dataset(small_spec(0.05));
  const EventTensor& ev = d.dataset.events[0];
  const Matrix noise = ev.data[1];  // no signatures on Q
  const double sd = std::sqrt(noise.array().square().mean());
  EXPECT_NEAR(sd, 0.05, 0.005);
}

TEST(Plant, SeedReproducible) {
  const PlantedDataset a = plant_dataset(small_spec(0.01));
  const PlantedDataset b = plant_dataset(small_spec(0.01));
  for (std::size_t e = 0; e < a.dataset.events.size(); ++e) {
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      EXPECT_EQ(a.dataset.events[e].data[c], b.dataset.events[e].data[c]);
      EXPECT_EQ(a.truth.events[e].channels[c].factors, b.truth.events[e].channels[c].factors);
    }
  }
  PlantedSpec other = small_spec(0.01);
  other.seed = 100;
  EXPECT_NE(plant_dataset(other).dataset.events[0].data[0], a.dataset.events[0].data[0]);
}

TEST(Plant, TooFewPmusRejected) {
  PlantedSpec spec = small_spec(0.0);
  spec.n_pmu = 1;
  EXPECT_THROW(plant_dataset(spec), ValidationError);
  spec = small_spec(-1.0);
  EXPECT_THROW(plant_dataset(spec), ValidationError);
}

TEST(Plant, StandardizedEventsPassInvariants) {
  PlantedSpec spec = default_toy_spec(4, 2, 8, 5);
  spec.missing_probability = 0.3;
  spec.pmu_pool = 12;
  const PlantedDataset d = plant_dataset(spec);
  EXPECT_EQ(d.dataset.events.size(), 6u);
  const Dataset prepared = prepare_dataset(d.dataset);
  for (const auto& e : prepared.events) {
    validate(e);
    EXPECT_TRUE(e.fully_valid());
    EXPECT_LE(e.n_pmu(), 8);
  }
  EXPECT_LE(d.dataset.pmu_registry().size(), 12u);
}

TEST(Plant, DecorrelatedFactorsMakeSharedBlockOrthogonal) {
  PlantedSpec spec = small_spec(0.0);
  spec.decorrelate_factors = true;
  const PlantedDataset d = plant_dataset(spec);
  const PlantedDataset plain = plant_dataset(small_spec(0.0));
  for (std::size_t e = 0; e < d.truth.events.size(); ++e) {
    const Matrix& p = d.truth.events[e].channels[0].factors;
    const Matrix& q = plain.truth.events[e].channels[0].factors;
    EXPECT_LT(std::abs(p.col(0).dot(p.col(1))), 1e-12 * p.col(0).norm() * p.col(1).norm());
    EXPECT_EQ(p.col(0), q.col(0));
    EXPECT_NEAR(p.col(1).norm(), q.col(1).norm(), 1e-12 * q.col(1).norm());
  }
  EXPECT_TRUE(planted_spec_from_json(to_json(spec)).decorrelate_factors);
}

TEST(Plant, SpecJsonRoundTrip) {
  const PlantedSpec spec = default_toy_spec(3, 2, 7, 11);
  const PlantedSpec back = planted_spec_from_json(to_json(spec));
  EXPECT_EQ(to_json(back), to_json(spec));
  const PlantedDataset a = plant_dataset(spec);
  const PlantedDataset b = plant_dataset(back);
  EXPECT_EQ(a.dataset.events[4].data[3], b.dataset.events[4].data[3]);
}

}  // namespace
}  // namespace pmuforge
