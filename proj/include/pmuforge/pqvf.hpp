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

#pragma once

// Event-tensor data model: one event is four N_pmu x T channel matrices
// (P, Q, V, F) with a validity mask, a class label and window timing.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmuforge/linalg.hpp"

namespace pmuforge {

enum class ChannelKind { RealPower = 0, ReactivePower = 1, VoltageMagnitude = 2, Frequency = 3 };

inline constexpr std::size_t kChannelCount = 4;
inline constexpr std::array<ChannelKind, kChannelCount> kAllChannels{
    ChannelKind::RealPower, ChannelKind::ReactivePower, ChannelKind::VoltageMagnitude,
    ChannelKind::Frequency};

inline constexpr std::size_t channel_index(ChannelKind c) { return static_cast<std::size_t>(c); }

/// "P", "Q", "V" or "F".
std::string_view channel_name(ChannelKind c);
ChannelKind parse_channel(std::string_view name);

enum class EventClass { Voltage, Frequency };

enum class Cause {
  LightningStrike,
  LineTrip,
  Wind,
  EquipmentFailure,
  GeneratorTrip,
  OnPremisesEquipmentFailure,
  Unknown
};

std::string_view class_name(EventClass c);
EventClass parse_class(std::string_view name);
std::string_view cause_name(Cause c);
Cause parse_cause(std::string_view name);

/// Whether `cause` may label an event of class `cls`.
bool cause_allowed(EventClass cls, Cause cause);

struct EventLabel {
  EventClass cls = EventClass::Voltage;
  std::optional<Cause> cause;

  friend bool operator==(const EventLabel&, const EventLabel&) = default;
};

/// Throws ValidationError when the cause is not permitted for the class.
EventLabel make_label(EventClass cls, std::optional<Cause> cause);

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct WindowConfig {
  Index length = 600;
  Index event_index = 300;
};

inline constexpr double kDefaultSampleInterval = 1.0 / 30.0;

struct EventTensor {
  std::string event_id;
  EventLabel label;
  std::vector<std::string> pmu_ids;
  std::array<Matrix, kChannelCount> data;  // N_pmu x T each; masked entries hold NaN
  std::array<Mask, kChannelCount> mask;    // true where the sample is valid
  double sample_interval = kDefaultSampleInterval;
  Index event_start_index = 300;

  Index n_pmu() const { return static_cast<Index>(pmu_ids.size()); }
  Index n_samples() const { return data[0].cols(); }

  const Matrix& channel(ChannelKind c) const { return data[channel_index(c)]; }
  Matrix& channel(ChannelKind c) { return data[channel_index(c)]; }

  bool fully_valid() const;

  /// Builds a tensor with an all-true mask. Channel matrices must agree in shape.
  static EventTensor from_channels(std::string event_id, EventLabel label,
                                   std::vector<std::string> pmu_ids,
                                   std::array<Matrix, kChannelCount> channels,
                                   Index event_start_index = 300,
                                   double sample_interval = kDefaultSampleInterval);
};

/// Checks shapes, id uniqueness, N_pmu >= 1 and mask/value consistency.
void validate(const EventTensor& event);

enum class Provenance { Measured, Synthetic, Toy };

std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view name);

struct Dataset {
  std::vector<EventTensor> events;
  Provenance provenance = Provenance::Measured;

  /// Sorted union of all events' pmu_ids.
  std::vector<std::string> pmu_registry() const;
  const EventTensor* find(std::string_view event_id) const;
};

inline constexpr double kDegenerateSigma = 1e-12;

struct StandardizeResult {
  EventTensor event;
  // degenerate[c][pmu] is set when that series had sigma < 1e-12 or fewer
  // than two valid samples; such series are zeroed.
  std::array<std::vector<bool>, kChannelCount> degenerate;

  std::size_t degenerate_count() const;
};

/// Shifts every (pmu, channel) series to zero mean and divides it by its
/// population standard deviation, using valid samples only.
StandardizeResult standardize(const EventTensor& event);

/// Keeps only PMUs whose mask is entirely true. Throws ValidationError when
/// none remain.
EventTensor drop_missing_pmus(const EventTensor& event);

/// Extracts [t_start - event_index, t_start - event_index + length) from a
/// raw recording of any length; identifiers, label and mask carry over and
/// the result has event_start_index = window.event_index.
EventTensor align_event_window(const EventTensor& raw, Index t_start,
                               const WindowConfig& window = {});

/// drop_missing_pmus followed by standardize on every event.
Dataset prepare_dataset(const Dataset& dataset);

}  // namespace pmuforge
