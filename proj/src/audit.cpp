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

#include "pmuforge/audit.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pmuforge/errors.hpp"
#include "pmuforge/io.hpp"
#include "pmuforge/linalg.hpp"
#include "pmuforge/parallel.hpp"

namespace pmuforge::audit {

using nlohmann::json;

namespace {

struct Accum {
  double ab = 0.0, aa = 0.0, bb = 0.0;

  void add(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return;
    ab += a * b;
    aa += a * a;
    bb += b * b;
  }

  double value() const {
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
  }
};

void check_shapes(const EventTensor& a, const EventTensor& b) {
  if (a.n_pmu() != b.n_pmu() || a.n_samples() != b.n_samples()) {
    throw ValidationError("event '" + a.event_id + "': shapes differ (" + std::to_string(a.n_pmu()) + "x" +
                          std::to_string(a.n_samples()) + " vs " + std::to_string(b.n_pmu()) + "x" +
                          std::to_string(b.n_samples()) + ")");
  }
}

Index samples_per_second(const EventTensor& e) {
  return std::max<Index>(1, static_cast<Index>(std::llround(1.0 / e.sample_interval)));
}

double mean_valid(const Matrix& x, Index row, Index begin, Index end) {
  double s = 0.0;
  Index n = 0;
  for (Index t = std::max<Index>(0, begin); t < std::min(end, x.cols()); ++t) {
    if (!std::isnan(x(row, t))) {
      s += x(row, t);
      ++n;
    }
  }
  return n > 0 ? s / static_cast<double>(n) : 0.0;
}

// Amplitude of the extremum at i from its two neighbours. Exact for a pure
// sinusoid; falls back to a parabola when the local fit is not oscillatory.
double peak_amplitude(std::span<const double> x, std::size_t i) {
  const double ym = x[i - 1], y0 = x[i], yp = x[i + 1];
  if (y0 != 0.0) {
    const double c = (ym + yp) / (2.0 * y0);
    if (c > -1.0 && c < 1.0) {
      const double s = std::sqrt(1.0 - c * c);
      const double q = (yp - ym) / (2.0 * s);
      return std::sqrt(y0 * y0 + q * q);
    }
  }
  const double curv = ym - 2.0 * y0 + yp;
  if (curv == 0.0) return std::abs(y0);
  return std::abs(y0 - (yp - ym) * (yp - ym) / (8.0 * curv));
}

Matrix finite_or_zero(const Matrix& m) { return m.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; }); }

}  // namespace

double normalized_inner(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("normalized_inner: length mismatch");
  Accum acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc.add(a[i], b[i]);
  return acc.value();
}

double tensor_correlation(const EventTensor& a, const EventTensor& b) {
  check_shapes(a, b);
  Accum acc;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const Matrix& x = a.data[c];
    const Matrix& y = b.data[c];
    for (Index i = 0; i < x.size(); ++i) acc.add(x.data()[i], y.data()[i]);
  }
  return acc.value();
}

std::vector<EventCorrelation> event_id_correlations(const Dataset& synth, const Dataset& measured) {
  for (const auto& m : measured.events) {
    if (synth.find(m.event_id) == nullptr) {
      throw ValidationError("event '" + m.event_id + "' has no synthetic counterpart");
    }
  }
  std::vector<EventCorrelation> out(synth.events.size());
  for (std::size_t i = 0; i < synth.events.size(); ++i) {
    const EventTensor& s = synth.events[i];
    const EventTensor* m = measured.find(s.event_id);
    if (m == nullptr) throw ValidationError("event '" + s.event_id + "' has no measured counterpart");
    out[i] = {s.event_id, tensor_correlation(s, *m)};
  }
  return out;
}

PmuCorrelations pmu_id_correlations(const Dataset& synth, const Dataset& measured) {
  std::map<std::string, Accum> acc;
  for (const auto& s : synth.events) {
    const EventTensor* m = measured.find(s.event_id);
    if (m == nullptr) continue;
    if (s.n_samples() != m->n_samples()) {
      throw ValidationError("event '" + s.event_id + "': sample counts differ");
    }
    std::map<std::string_view, Index> mrow;
    for (Index r = 0; r < m->n_pmu(); ++r) mrow.emplace(m->pmu_ids[static_cast<std::size_t>(r)], r);
    for (Index r = 0; r < s.n_pmu(); ++r) {
      const std::string& id = s.pmu_ids[static_cast<std::size_t>(r)];
      const auto it = mrow.find(id);
      if (it == mrow.end()) continue;
      Accum& a = acc[id];
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        for (Index t = 0; t < s.n_samples(); ++t) a.add(s.data[c](r, t), m->data[c](it->second, t));
      }
    }
  }
  PmuCorrelations out;
  const auto ids_s = synth.pmu_registry();
  const auto ids_m = measured.pmu_registry();
  std::vector<std::string> all;
  std::set_union(ids_s.begin(), ids_s.end(), ids_m.begin(), ids_m.end(), std::back_inserter(all));
  for (const auto& id : all) {
    const auto it = acc.find(id);
    if (it == acc.end()) {
      ++out.skipped;
      continue;
    }
    out.pmu_ids.push_back(id);
    out.values.push_back(it->second.value());
  }
  return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 1) throw ValidationError("histogram: bins must be >= 1");
  if (values.empty()) throw ValidationError("histogram: no values");
  Histogram h;
  h.counts.assign(bins, 0);
  const double width = 2.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? 1.0 : -1.0 + width * static_cast<double>(b));
  for (const double v : values) {
    if (std::isnan(v)) throw ValidationError("histogram: NaN value");
    const double pos = (std::clamp(v, -1.0, 1.0) + 1.0) / width;
    const auto b = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(pos))));
    ++h.counts[b];
  }
  return h;
}

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out += io::format_double(h.edges[b]) + "," + io::format_double(h.edges[b + 1]) + "," +
           std::to_string(h.counts[b]) + "\n";
  }
  return out;
}

double wrong_direction_fraction(const EventTensor& event, double threshold) {
  if (event.label.cls != EventClass::Voltage) {
    throw ValidationError("wrong_direction_fraction: event '" + event.event_id + "' is not a voltage event");
  }
  if (event.n_pmu() == 0) return 0.0;
  const Matrix& v = event.channel(ChannelKind::VoltageMagnitude);
  const Index w = samples_per_second(event);
  const Index e = event.event_start_index;
  Index up = 0;
  for (Index r = 0; r < event.n_pmu(); ++r) {
    if (mean_valid(v, r, e, e + w) - mean_valid(v, r, e - w, e) > threshold) ++up;
  }
  return static_cast<double>(up) / static_cast<double>(event.n_pmu());
}

Vector banding_dispersion(const EventTensor& event) {
  if (event.label.cls != EventClass::Frequency) {
    throw ValidationError("banding_dispersion: event '" + event.event_id + "' is not a frequency event");
  }
  if (event.n_pmu() < 2) throw ValidationError("banding_dispersion: need at least 2 PMUs");
  const Matrix& f = event.channel(ChannelKind::Frequency);
  Vector out(f.cols());
  for (Index t = 0; t < f.cols(); ++t) {
    // moments of the offsets from the first valid value: identical traces give exactly 0
    double ref = 0.0, s = 0.0, ss = 0.0;
    Index n = 0;
    for (Index r = 0; r < f.rows(); ++r) {
      if (std::isnan(f(r, t))) continue;
      if (n == 0) ref = f(r, t);
      s += f(r, t) - ref;
      ++n;
    }
    if (n < 1) {
      out[t] = 0.0;
      continue;
    }
    const double mean = s / static_cast<double>(n);
    for (Index r = 0; r < f.rows(); ++r) {
      if (!std::isnan(f(r, t))) ss += (f(r, t) - ref - mean) * (f(r, t) - ref - mean);
    }
    out[t] = std::sqrt(ss / static_cast<double>(n));
  }
  return out;
}

DampingEstimate oscillation_damping(std::span<const double> x, Index event_index) {
  DampingEstimate est;
  const std::size_t n = x.size();
  const std::size_t start = static_cast<std::size_t>(std::clamp<Index>(event_index, 0, static_cast<Index>(n)));
  double peak = 0.0;
  for (std::size_t t = start; t < n; ++t) peak = std::max(peak, std::abs(x[t]));
  if (peak == 0.0 || n < 3) return est;

  struct Extremum {
    std::size_t t;
    bool is_max;
    double mag;
  };
  std::vector<Extremum> ext;
  for (std::size_t t = std::max<std::size_t>(start, 1); t + 1 < n; ++t) {
    const double dl = x[t] - x[t - 1];
    const double dr = x[t + 1] - x[t];
    const bool is_max = dl > 0.0 && dr <= 0.0;
    const bool is_min = dl < 0.0 && dr >= 0.0;
    if (!is_max && !is_min) continue;
    if (std::abs(x[t]) < 0.05 * peak) continue;
    // alternating sign: maxima above zero, minima below
    if ((is_max && x[t] <= 0.0) || (is_min && x[t] >= 0.0)) continue;
    const Extremum e{t, is_max, std::abs(x[t])};
    if (!ext.empty() && ext.back().is_max == is_max) {
      if (e.mag > ext.back().mag) ext.back() = e;
      continue;
    }
    ext.push_back(e);
  }
  est.extrema = ext.size();
  if (ext.size() < 3) return est;
  est.oscillatory = true;
  // least squares of log amplitude against extremum index
  const double m = static_cast<double>(ext.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ext.size(); ++i) {
    const double xi = static_cast<double>(i);
    const double yi = std::log(peak_amplitude(x, ext[i].t));
    sx += xi;
    sy += yi;
    sxx += xi * xi;
    sxy += xi * yi;
  }
  est.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return est;
}

json to_json(const AuditConfig& c) {
  return json{{"event_threshold", c.event_threshold},
              {"pmu_threshold", c.pmu_threshold},
              {"bins", c.bins},
              {"wrong_direction_threshold", c.wrong_direction_threshold}};
}

AuditConfig audit_config_from_json(const json& doc) {
  AuditConfig c;
  c.event_threshold = doc.value("event_threshold", c.event_threshold);
  c.pmu_threshold = doc.value("pmu_threshold", c.pmu_threshold);
  c.bins = doc.value("bins", c.bins);
  c.wrong_direction_threshold = doc.value("wrong_direction_threshold", c.wrong_direction_threshold);
  if (c.bins < 1) throw ValidationError("audit bins must be >= 1");
  return c;
}

AuditReport run_audit(const Dataset& synth, const Dataset& measured, const AuditConfig& config) {
  AuditReport r;
  r.config = config;
  r.event_correlations = event_id_correlations(synth, measured);
  std::vector<double> ev;
  for (const auto& e : r.event_correlations) {
    ev.push_back(e.value);
    if (e.value > config.event_threshold) r.flagged_events.push_back(e.event_id);
  }
  if (!ev.empty()) {
    r.event_histogram = histogram(ev, config.bins);
    r.max_event_corr = *std::max_element(ev.begin(), ev.end());
  }
  r.pmu_correlations = pmu_id_correlations(synth, measured);
  const auto& pv = r.pmu_correlations.values;
  if (!pv.empty()) {
    r.pmu_histogram = histogram(pv, config.bins);
    r.max_pmu_corr = *std::max_element(pv.begin(), pv.end());
    for (std::size_t i = 0; i < pv.size(); ++i) {
      if (pv[i] > config.pmu_threshold) r.flagged_pmus.push_back(r.pmu_correlations.pmu_ids[i]);
    }
  }

  r.fidelity.resize(synth.events.size());
  parallel_for(synth.events.size(), [&](std::size_t i) {
    const EventTensor& s = synth.events[i];
    const EventTensor& m = *measured.find(s.event_id);
    EventFidelity f;
    f.event_id = s.event_id;
    f.cls = s.label.cls;
    if (f.cls == EventClass::Voltage) {
      f.wrong_direction_synthetic = wrong_direction_fraction(s, config.wrong_direction_threshold);
      f.wrong_direction_measured = wrong_direction_fraction(m, config.wrong_direction_threshold);
    } else if (s.n_pmu() >= 2 && m.n_pmu() >= 2) {
      f.banding_l1 = (banding_dispersion(s) - banding_dispersion(m)).cwiseAbs().sum();
    }
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      auto top = [&](const EventTensor& e) {
        const Matrix x = finite_or_zero(e.data[c]);
        const linalg::TruncatedSvd svd = linalg::top_right_singular_vectors(x, 1);
        return oscillation_damping(row_span(svd.basis, 0), e.event_start_index);
      };
      f.damping[c] = {top(s), top(m)};
    }
    r.fidelity[i] = std::move(f);
  });
  return r;
}

json AuditReport::to_json() const {
  auto hist = [](const Histogram& h) { return json{{"edges", h.edges}, {"counts", h.counts}}; };
  auto damping = [](const DampingEstimate& d) {
    return d.oscillatory ? json{{"oscillatory", true}, {"extrema", d.extrema}, {"slope", d.slope}}
                         : json{{"oscillatory", false}, {"extrema", d.extrema}};
  };
  json events = json::array();
  for (const auto& e : event_correlations) events.push_back(json{{"event_id", e.event_id}, {"correlation", e.value}});
  json pmus = json::array();
  for (std::size_t i = 0; i < pmu_correlations.values.size(); ++i) {
    pmus.push_back(json{{"pmu_id", pmu_correlations.pmu_ids[i]}, {"correlation", pmu_correlations.values[i]}});
  }
  json fid = json::array();
  for (const auto& f : fidelity) {
    json item{{"event_id", f.event_id}, {"class", class_name(f.cls)}};
    if (f.wrong_direction_synthetic) item["wrong_direction_synthetic"] = *f.wrong_direction_synthetic;
    if (f.wrong_direction_measured) item["wrong_direction_measured"] = *f.wrong_direction_measured;
    if (f.banding_l1) item["banding_l1"] = *f.banding_l1;
    json d = json::object();
    for (const ChannelKind c : kAllChannels) {
      const auto& cd = f.damping[channel_index(c)];
      d[std::string(channel_name(c))] = json{{"synthetic", damping(cd.synthetic)}, {"measured", damping(cd.measured)}};
    }
    item["damping"] = std::move(d);
    fid.push_back(std::move(item));
  }
  return json{{"config", audit::to_json(config)},
              {"event_correlations", std::move(events)},
              {"event_histogram", hist(event_histogram)},
              {"max_event_corr", max_event_corr},
              {"event_flagged", !flagged_events.empty()},
              {"flagged_events", flagged_events},
              {"pmu_correlations", std::move(pmus)},
              {"pmu_histogram", hist(pmu_histogram)},
              {"max_pmu_corr", max_pmu_corr ? json(*max_pmu_corr) : json(nullptr)},
              {"pmu_flagged", !flagged_pmus.empty()},
              {"flagged_pmus", flagged_pmus},
              {"skipped_pmus", pmu_correlations.skipped},
              {"fidelity", std::move(fid)}};
}

}  // namespace pmuforge::audit
