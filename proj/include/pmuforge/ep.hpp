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

// Event-Participation decomposition. For one channel of one event the
// N_pmu x T matrix X is factored as X = P * S + residual, where the rows of S
// (k x T) are orthonormal event signatures shared by all PMUs and P (N x k)
// holds per-PMU participation factors.

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "pmuforge/pqvf.hpp"

namespace pmuforge::ep {

enum class BlockLabel { Inter, Intra, Extra };

std::string_view block_name(BlockLabel label);
BlockLabel parse_block(std::string_view name);

struct SignatureSet {
  Matrix basis;                    // k x T, rows are signatures
  std::vector<BlockLabel> labels;  // one per row

  Index rank() const { return basis.rows(); }
  Index length() const { return basis.cols(); }
};

struct ChannelDecomposition {
  SignatureSet signatures;
  Matrix participation;  // N x k, rows follow the event's pmu_ids
  Matrix residual;       // N x T

  /// Columns of `participation` (in order) whose signature has `label`.
  Matrix participation_block(BlockLabel label) const;
  Index block_rank(BlockLabel label) const;
};

struct EPDecomposition {
  std::string event_id;
  EventLabel label;
  std::vector<std::string> pmu_ids;
  Index event_start_index = 300;
  double sample_interval = kDefaultSampleInterval;
  std::array<ChannelDecomposition, kChannelCount> channels;

  const ChannelDecomposition& channel(ChannelKind c) const { return channels[channel_index(c)]; }
  ChannelDecomposition& channel(ChannelKind c) { return channels[channel_index(c)]; }
};

struct Ranks {
  Index k_inter = 4;
  Index k_intra = 4;
};

/// Rank-k truncated SVD of one channel: S holds the top-k right singular
/// vectors, P = X * S^T, residual = X - P * S. Requires a fully valid
/// channel and 1 <= k <= min(N, T). Signatures are labelled Inter.
ChannelDecomposition decompose_event(const EventTensor& event, ChannelKind channel, Index k);

/// Inter-event signatures are the top k_inter right singular vectors of all
/// events of one class stacked row-wise; each event's intra signatures are
/// the top k_intra right singular vectors of its own residual after removing
/// the inter part. Classes are handled independently. The result is parallel
/// to dataset.events; each entry has inter rows followed by intra rows.
///
/// k_inter is capped at the stacked row count and k_intra at each event's PMU
/// count.
std::vector<ChannelDecomposition> split_inter_intra(const Dataset& dataset, ChannelKind channel,
                                                    Index k_inter, Index k_intra);

struct Reintegration {
  SignatureSet signatures;  // orthonormal Q rows, labels carried over
  Matrix participation;     // [P_1 | P_2 | ...] * R^T
  Matrix r;                 // k_total x k_total upper triangular
};

/// Concatenates signature blocks, orthonormalizes them with a reorthogonalized
/// QR and folds R into the participations so the product P * S is unchanged.
/// Throws ValidationError naming dependent columns when |R_jj| < 1e-10 ||M||_F.
Reintegration qr_reintegrate(const std::vector<SignatureSet>& blocks,
                             const std::vector<Matrix>& participations);

/// P * S (+ residual).
Matrix reconstruct(const ChannelDecomposition& decomp, bool include_residual);

/// split_inter_intra on every channel followed by qr_reintegrate of the
/// inter and intra blocks. Events must be standardized and complete.
std::vector<EPDecomposition> decompose_dataset(const Dataset& dataset, const Ranks& ranks);

// Directory layout per event: <stem>/<channel>_signatures.csv (T x k),
// <stem>/<channel>_participation.csv (N x k, leading pmu_id column) and
// <stem>/decomposition.json with labels, ranks and event metadata.
void export_decomposition(const EPDecomposition& decomp, const std::filesystem::path& dir);
EPDecomposition import_decomposition(const std::filesystem::path& dir);

}  // namespace pmuforge::ep
