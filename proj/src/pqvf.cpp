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

#include "pmuforge/pqvf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include "pmuforge/errors.hpp"
#include "pmuforge/kernels.hpp"

namespace pmuforge {

namespace {

constexpr std::array<std::string_view, kChannelCount> kChannelNames{"P", "Q", "V", "F"};

constexpr std::array<std::pair<Cause, std::string_view>, 7> kCauseNames{{
    {Cause::LightningStrike, "LightningStrike"},
    {Cause::LineTrip, "LineTrip"},
    {Cause::Wind, "Wind"},
    {Cause::EquipmentFailure, "EquipmentFailure"},
    {Cause::GeneratorTrip, "GeneratorTrip"},
    {Cause::OnPremisesEquipmentFailure, "OnPremisesEquipmentFailure"},
    {Cause::Unknown, "Unknown"},
}};

}  // namespace

std::string_view channel_name(ChannelKind c) { return kChannelNames[channel_index(c)]; }

ChannelKind parse_channel(std::string_view name) {
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (kChannelNames[i] == name) return kAllChannels[i];
  }
  throw ValidationError("unknown channel '" + std::string(name) + "'");
}

std::string_view class_name(EventClass c) {
  return c == EventClass::Voltage ? "Voltage" : "Frequency";
}

EventClass parse_class(std::string_view name) {
  if (name == "Voltage") return EventClass::Voltage;
  if (name == "Frequency") return EventClass::Frequency;
  throw ValidationError("unknown event class '" + std::string(name) + "'");
}

std::string_view cause_name(Cause c) {
  for (const auto& [cause, name] : kCauseNames) {
    if (cause == c) return name;
  }
  return "Unknown";
}

Cause parse_cause(std::string_view name) {
  for (const auto& [cause, n] : kCauseNames) {
    if (n == name) return cause;
  }
  throw ValidationError("unknown event cause '" + std::string(name) + "'");
}

bool cause_allowed(EventClass cls, Cause cause) {
  if (cause == Cause::Unknown) return true;
  if (cls == EventClass::Frequency) {
    return cause == Cause::GeneratorTrip || cause == Cause::OnPremisesEquipmentFailure;
  }
  return cause == Cause::LightningStrike || cause == Cause::LineTrip || cause == Cause::Wind ||
         cause == Cause::EquipmentFailure;
}

EventLabel make_label(EventClass cls, std::optional<Cause> cause) {
  if (cause && !cause_allowed(cls, *cause)) {
    throw ValidationError("cause " + std::string(cause_name(*cause)) + " is not valid for " +
                          std::string(class_name(cls)) + " events");
  }
  return EventLabel{cls, cause};
}

bool EventTensor::fully_valid() const {
  return std::all_of(mask.begin(), mask.end(), [](const Mask& m) { return m.all(); });
}

EventTensor EventTensor::from_channels(std::string event_id, EventLabel label,
                                       std::vector<std::string> pmu_ids,
                                       std::array<Matrix, kChannelCount> channels,
                                       Index event_start_index, double sample_interval) {
  EventTensor e;
  e.event_id = std::move(event_id);
  e.label = label;
  e.pmu_ids = std::move(pmu_ids);
  e.data = std::move(channels);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    e.mask[c] = Mask::Constant(e.data[c].rows(), e.data[c].cols(), true);
  }
  e.event_start_index = event_start_index;
  e.sample_interval = sample_interval;
  validate(e);
  return e;
}

void validate(const EventTensor& event) {
  const std::string where = "event '" + event.event_id + "': ";
  if (event.pmu_ids.empty()) throw ValidationError(where + "no PMUs");
  std::unordered_set<std::string> seen;
  for (const auto& id : event.pmu_ids) {
    if (!seen.insert(id).second) throw ValidationError(where + "duplicate pmu_id '" + id + "'");
  }
  const Index n = event.n_pmu();
  const Index t = event.data[0].cols();
  if (t < 1) throw ValidationError(where + "empty time axis");
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (event.data[c].rows() != n || event.data[c].cols() != t || event.mask[c].rows() != n ||
        event.mask[c].cols() != t) {
      throw ValidationError(where + "channel " + std::string(kChannelNames[c]) +
                            " has inconsistent shape");
    }
  }
  if (event.event_start_index < 0 || event.event_start_index >= t) {
    throw ValidationError(where + "event_start_index outside the window");
  }
  if (!(event.sample_interval > 0.0)) throw ValidationError(where + "sample_interval must be > 0");
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Measured:
      return "measured";
    case Provenance::Synthetic:
      return "synthetic";
    case Provenance::Toy:
      return "toy";
  }
  return "measured";
}

Provenance parse_provenance(std::string_view name) {
  if (name == "measured") return Provenance::Measured;
  if (name == "synthetic") return Provenance::Synthetic;
  if (name == "toy") return Provenance::Toy;
  throw ValidationError("unknown provenance '" + std::string(name) + "'");
}

std::vector<std::string> Dataset::pmu_registry() const {
  std::set<std::string> ids;
  for (const auto& e : events) ids.insert(e.pmu_ids.begin(), e.pmu_ids.end());
  return {ids.begin(), ids.end()};
}

const EventTensor* Dataset::find(std::string_view event_id) const {
  for (const auto& e : events) {
    if (e.event_id == event_id) return &e;
  }
  return nullptr;
}

std::size_t StandardizeResult::degenerate_count() const {
  std::size_t n = 0;
  for (const auto& flags : degenerate) n += static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
  return n;
}

StandardizeResult standardize(const EventTensor& event) {
  StandardizeResult out{event, {}};
  const Index n = event.n_pmu();
  const Index t = event.n_samples();
  std::vector<double> valid;
  valid.reserve(static_cast<std::size_t>(t));
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    out.degenerate[c].assign(static_cast<std::size_t>(n), false);
    Matrix& m = out.event.data[c];
    const Mask& mask = event.mask[c];
    for (Index i = 0; i < n; ++i) {
      auto row = row_span(m, i);
      const bool complete = mask.row(i).all();
      double mean = 0.0;
      double sigma = 0.0;
      std::size_t count = 0;
      if (complete) {
        count = row.size();
        mean = kernels::sum(row) / static_cast<double>(count);
        sigma = std::sqrt(kernels::sum_squared_deviation(row, mean) / static_cast<double>(count));
      } else {
        valid.clear();
        for (Index s = 0; s < t; ++s) {
          if (mask(i, s)) valid.push_back(m(i, s));
        }
        count = valid.size();
        if (count > 0) {
          mean = kernels::sum(valid) / static_cast<double>(count);
          sigma = std::sqrt(kernels::sum_squared_deviation(valid, mean) / static_cast<double>(count));
        }
      }
      const bool degenerate = count < 2 || !(sigma >= kDegenerateSigma);
      out.degenerate[c][static_cast<std::size_t>(i)] = degenerate;
      if (complete) {
        if (degenerate) {
          std::fill(row.begin(), row.end(), 0.0);
        } else {
          kernels::shift_scale(row, mean, 1.0 / sigma);
        }
        continue;
      }
      for (Index s = 0; s < t; ++s) {
        if (!mask(i, s)) continue;
        m(i, s) = degenerate ? 0.0 : (m(i, s) - mean) * (1.0 / sigma);
      }
    }
  }
  return out;
}

EventTensor drop_missing_pmus(const EventTensor& event) {
  std::vector<Index> keep;
  for (Index i = 0; i < event.n_pmu(); ++i) {
    bool complete = true;
    for (std::size_t c = 0; c < kChannelCount && complete; ++c) complete = event.mask[c].row(i).all();
    if (complete) keep.push_back(i);
  }
  if (keep.empty()) {
    throw ValidationError("event '" + event.event_id + "': event has no complete PMUs");
  }
  if (static_cast<Index>(keep.size()) == event.n_pmu()) return event;

  EventTensor out;
  out.event_id = event.event_id;
  out.label = event.label;
  out.sample_interval = event.sample_interval;
  out.event_start_index = event.event_start_index;
  const Index t = event.n_samples();
  for (const Index i : keep) out.pmu_ids.push_back(event.pmu_ids[static_cast<std::size_t>(i)]);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    out.data[c].resize(static_cast<Index>(keep.size()), t);
    out.mask[c] = Mask::Constant(static_cast<Index>(keep.size()), t, true);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      out.data[c].row(static_cast<Index>(r)) = event.data[c].row(keep[r]);
    }
  }
  return out;
}

EventTensor align_event_window(const EventTensor& raw, Index t_start, const WindowConfig& window) {
  const Index t_raw = raw.n_samples();
  const Index before = window.event_index;
  const Index after = window.length - window.event_index;
  if (t_raw < window.length || t_start - before < 0 || t_start + after > t_raw) {
    throw ValidationError("event '" + raw.event_id + "': window needs " + std::to_string(before) +
                          " samples before and " + std::to_string(after) +
                          " at/after the event start; available " + std::to_string(std::max<Index>(t_start, 0)) +
                          " before and " + std::to_string(std::max<Index>(t_raw - t_start, 0)) +
                          " at/after (t_start=" + std::to_string(t_start) +
                          ", T_raw=" + std::to_string(t_raw) + ")");
  }
  EventTensor out;
  out.event_id = raw.event_id;
  out.label = raw.label;
  out.pmu_ids = raw.pmu_ids;
  out.sample_interval = raw.sample_interval;
  out.event_start_index = window.event_index;
  const Index first = t_start - before;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    out.data[c] = raw.data[c].middleCols(first, window.length);
    out.mask[c] = raw.mask[c].middleCols(first, window.length);
  }
  return out;
}

Dataset prepare_dataset(const Dataset& dataset) {
  Dataset out;
  out.provenance = dataset.provenance;
  out.events.reserve(dataset.events.size());
  for (const auto& e : dataset.events) out.events.push_back(standardize(drop_missing_pmus(e)).event);
  return out;
}

}  // namespace pmuforge
