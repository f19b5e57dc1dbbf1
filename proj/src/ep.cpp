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

#include "pmuforge/ep.hpp"

#include <charconv>
#include <sstream>

#include "pmuforge/errors.hpp"
#include "pmuforge/io.hpp"

namespace pmuforge::ep {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view block_name(BlockLabel label) {
  switch (label) {
    case BlockLabel::Inter:
      return "inter";
    case BlockLabel::Intra:
      return "intra";
    case BlockLabel::Extra:
      return "extra";
  }
  return "extra";
}

BlockLabel parse_block(std::string_view name) {
  if (name == "inter") return BlockLabel::Inter;
  if (name == "intra") return BlockLabel::Intra;
  if (name == "extra") return BlockLabel::Extra;
  throw ValidationError("unknown signature block '" + std::string(name) + "'");
}

Matrix ChannelDecomposition::participation_block(BlockLabel label) const {
  std::vector<Index> cols;
  for (std::size_t j = 0; j < signatures.labels.size(); ++j) {
    if (signatures.labels[j] == label) cols.push_back(static_cast<Index>(j));
  }
  Matrix out(participation.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = participation.col(cols[j]);
  return out;
}

Index ChannelDecomposition::block_rank(BlockLabel label) const {
  return static_cast<Index>(std::count(signatures.labels.begin(), signatures.labels.end(), label));
}

namespace {

void require_complete(const EventTensor& event, ChannelKind channel) {
  if (!event.mask[channel_index(channel)].all()) {
    throw ValidationError("event '" + event.event_id + "' channel " + std::string(channel_name(channel)) +
                          " has masked samples; call drop_missing_pmus first");
  }
}

Matrix vstack(const std::vector<const Matrix*>& parts) {
  Index rows = 0;
  for (const Matrix* m : parts) rows += m->rows();
  Matrix out(rows, parts.front()->cols());
  Index at = 0;
  for (const Matrix* m : parts) {
    out.middleRows(at, m->rows()) = *m;
    at += m->rows();
  }
  return out;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a;
  out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace

ChannelDecomposition decompose_event(const EventTensor& event, ChannelKind channel, Index k) {
  require_complete(event, channel);
  const Matrix& x = event.channel(channel);
  const Index max_rank = std::min(x.rows(), x.cols());
  if (k < 0 || k > max_rank) {
    throw ValidationError("event '" + event.event_id + "': rank " + std::to_string(k) +
                          " exceeds min(N_pmu, T) = " + std::to_string(max_rank));
  }
  ChannelDecomposition out;
  out.signatures.basis = linalg::top_right_singular_vectors(x, k).basis;
  out.signatures.labels.assign(static_cast<std::size_t>(k), BlockLabel::Inter);
  out.participation = linalg::project_rows(x, out.signatures.basis);
  out.residual = x - linalg::expand_rows(out.participation, out.signatures.basis);
  return out;
}

std::vector<ChannelDecomposition> split_inter_intra(const Dataset& dataset, ChannelKind channel,
                                                    Index k_inter, Index k_intra) {
  if (dataset.events.empty()) throw ValidationError("split_inter_intra: empty dataset");
  if (k_inter < 0 || k_intra < 0) throw ValidationError("split_inter_intra: ranks must be non-negative");
  const Index t = dataset.events.front().n_samples();
  if (k_inter + k_intra > t) {
    throw ValidationError("split_inter_intra: k_inter + k_intra = " + std::to_string(k_inter + k_intra) +
                          " exceeds T = " + std::to_string(t));
  }
  for (const auto& e : dataset.events) {
    if (e.n_samples() != t) throw ValidationError("split_inter_intra: events differ in window length");
    require_complete(e, channel);
  }

  std::vector<ChannelDecomposition> out(dataset.events.size());
  for (const EventClass cls : {EventClass::Voltage, EventClass::Frequency}) {
    std::vector<std::size_t> members;
    std::vector<const Matrix*> parts;
    for (std::size_t i = 0; i < dataset.events.size(); ++i) {
      if (dataset.events[i].label.cls != cls) continue;
      members.push_back(i);
      parts.push_back(&dataset.events[i].channel(channel));
    }
    if (members.empty()) continue;
    const Matrix stacked = vstack(parts);
    const Index k_shared = std::min(k_inter, stacked.rows());
    const Matrix inter = linalg::top_right_singular_vectors(stacked, k_shared).basis;

    for (const std::size_t i : members) {
      const Matrix& x = dataset.events[i].channel(channel);
      const Matrix p_inter = linalg::project_rows(x, inter);
      const Matrix after_inter = x - linalg::expand_rows(p_inter, inter);
      const Index k_own = std::min({k_intra, x.rows(), t - k_shared});
      const Matrix intra = linalg::top_right_singular_vectors(after_inter, k_own).basis;
      const Matrix p_intra = linalg::project_rows(after_inter, intra);

      ChannelDecomposition& d = out[i];
      d.signatures.basis.resize(k_shared + k_own, t);
      d.signatures.basis.topRows(k_shared) = inter;
      d.signatures.basis.bottomRows(k_own) = intra;
      d.signatures.labels.assign(static_cast<std::size_t>(k_shared), BlockLabel::Inter);
      d.signatures.labels.insert(d.signatures.labels.end(), static_cast<std::size_t>(k_own), BlockLabel::Intra);
      d.participation = hstack(p_inter, p_intra);
      d.residual = after_inter - linalg::expand_rows(p_intra, intra);
    }
  }
  return out;
}

Reintegration qr_reintegrate(const std::vector<SignatureSet>& blocks, const std::vector<Matrix>& participations) {
  if (blocks.size() != participations.size()) {
    throw ValidationError("qr_reintegrate: " + std::to_string(blocks.size()) + " signature blocks but " +
                          std::to_string(participations.size()) + " participation blocks");
  }
  if (blocks.empty()) throw ValidationError("qr_reintegrate: no blocks");
  const Index t = blocks.front().length();
  const Index n = participations.front().rows();
  Index k_total = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].length() != t) throw ValidationError("qr_reintegrate: blocks differ in signature length");
    if (blocks[b].labels.size() != static_cast<std::size_t>(blocks[b].rank())) {
      throw ValidationError("qr_reintegrate: block labels do not match block rank");
    }
    if (participations[b].rows() != n || participations[b].cols() != blocks[b].rank()) {
      throw ValidationError("qr_reintegrate: participation block " + std::to_string(b) + " has shape " +
                            std::to_string(participations[b].rows()) + "x" + std::to_string(participations[b].cols()) +
                            ", expected " + std::to_string(n) + "x" + std::to_string(blocks[b].rank()));
    }
    k_total += blocks[b].rank();
  }
  if (k_total > t) throw ValidationError("qr_reintegrate: more signatures than samples");

  Matrix m(k_total, t);
  Matrix p(n, k_total);
  Reintegration out;
  Index at = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Index k = blocks[b].rank();
    m.middleRows(at, k) = blocks[b].basis;
    p.middleCols(at, k) = participations[b];
    out.signatures.labels.insert(out.signatures.labels.end(), blocks[b].labels.begin(), blocks[b].labels.end());
    at += k;
  }

  linalg::RowQr qr = linalg::orthonormalize_rows(m, 1e-10);
  if (!qr.dependent.empty()) {
    std::ostringstream msg;
    msg << "qr_reintegrate: signature matrix is rank deficient; dependent column(s)";
    for (const Index j : qr.dependent) msg << ' ' << (j + 1);
    msg << " (1-based)";
    throw ValidationError(msg.str());
  }
  out.signatures.basis = std::move(qr.q);
  out.participation = p * qr.r.transpose();
  out.r = std::move(qr.r);
  return out;
}

Matrix reconstruct(const ChannelDecomposition& decomp, bool include_residual) {
  Matrix x = linalg::expand_rows(decomp.participation, decomp.signatures.basis);
  if (include_residual && decomp.residual.size() > 0) x += decomp.residual;
  return x;
}

std::vector<EPDecomposition> decompose_dataset(const Dataset& dataset, const Ranks& ranks) {
  std::vector<EPDecomposition> out(dataset.events.size());
  for (std::size_t i = 0; i < dataset.events.size(); ++i) {
    const EventTensor& e = dataset.events[i];
    out[i].event_id = e.event_id;
    out[i].label = e.label;
    out[i].pmu_ids = e.pmu_ids;
    out[i].event_start_index = e.event_start_index;
    out[i].sample_interval = e.sample_interval;
  }
  for (const ChannelKind c : kAllChannels) {
    std::vector<ChannelDecomposition> split = split_inter_intra(dataset, c, ranks.k_inter, ranks.k_intra);
    for (std::size_t i = 0; i < split.size(); ++i) {
      ChannelDecomposition& d = split[i];
      const Index k_in = d.block_rank(BlockLabel::Inter);
      const Index k_own = d.block_rank(BlockLabel::Intra);
      SignatureSet inter{d.signatures.basis.topRows(k_in), std::vector<BlockLabel>(static_cast<std::size_t>(k_in), BlockLabel::Inter)};
      SignatureSet intra{d.signatures.basis.bottomRows(k_own), std::vector<BlockLabel>(static_cast<std::size_t>(k_own), BlockLabel::Intra)};
      try {
        Reintegration r = qr_reintegrate({inter, intra}, {d.participation.leftCols(k_in), d.participation.rightCols(k_own)});
        d.signatures = std::move(r.signatures);
        d.participation = std::move(r.participation);
      } catch (const ValidationError& ex) {
        throw ValidationError("event '" + dataset.events[i].event_id + "' channel " + std::string(channel_name(c)) +
                              ": " + ex.what());
      }
      out[i].channels[channel_index(c)] = std::move(d);
    }
  }
  return out;
}

namespace {

std::string matrix_csv(const Matrix& m, const std::string& first_header, const std::vector<std::string>& row_keys) {
  std::string text = first_header;
  for (Index j = 0; j < m.cols(); ++j) text += ",sig_" + std::to_string(j);
  text += '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    text += row_keys.empty() ? std::to_string(i) : row_keys[static_cast<std::size_t>(i)];
    for (Index j = 0; j < m.cols(); ++j) {
      text += ',';
      text += io::format_double(m(i, j));
    }
    text += '\n';
  }
  return text;
}

Matrix parse_matrix_csv(const fs::path& path, Index cols, std::vector<std::string>* keys) {
  std::istringstream in(io::read_text_file(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::size_t start = 0;
    std::size_t comma = line.find(',');
    if (keys != nullptr) keys->push_back(line.substr(0, comma));
    while (comma != std::string::npos) {
      start = comma + 1;
      comma = line.find(',', start);
      const std::string_view f(line.data() + start, (comma == std::string::npos ? line.size() : comma) - start);
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed value");
      }
      vals.push_back(v);
    }
    if (static_cast<Index>(vals.size()) != cols) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) + " values");
    }
    rows.push_back(std::move(vals));
  }
  Matrix m(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < cols; ++j) m(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  return m;
}

}  // namespace

void export_decomposition(const EPDecomposition& d, const fs::path& dir) {
  json meta;
  meta["event_id"] = d.event_id;
  meta["class"] = class_name(d.label.cls);
  meta["cause"] = d.label.cause ? json(cause_name(*d.label.cause)) : json(nullptr);
  meta["event_start_index"] = d.event_start_index;
  meta["sample_interval_seconds"] = d.sample_interval;
  meta["pmu_ids"] = d.pmu_ids;
  json channels = json::object();
  for (const ChannelKind c : kAllChannels) {
    const ChannelDecomposition& cd = d.channel(c);
    const std::string name(channel_name(c));
    json labels = json::array();
    for (const BlockLabel l : cd.signatures.labels) labels.push_back(block_name(l));
    channels[name] = {{"labels", labels},
                      {"rank", cd.signatures.rank()},
                      {"k_inter", cd.block_rank(BlockLabel::Inter)},
                      {"k_intra", cd.block_rank(BlockLabel::Intra)},
                      {"length", cd.signatures.length()},
                      {"residual_norm", cd.residual.size() > 0 ? cd.residual.norm() : 0.0}};
    io::write_text_file(dir / (name + "_signatures.csv"),
                        matrix_csv(cd.signatures.basis.transpose(), "t_index", {}));
    io::write_text_file(dir / (name + "_participation.csv"), matrix_csv(cd.participation, "pmu_id", d.pmu_ids));
  }
  meta["channels"] = channels;
  io::write_json_file(dir / "decomposition.json", meta);
}

EPDecomposition import_decomposition(const fs::path& dir) {
  const json meta = io::read_json_file(dir / "decomposition.json");
  EPDecomposition d;
  try {
    d.event_id = meta.at("event_id").get<std::string>();
    std::optional<Cause> cause;
    if (!meta.at("cause").is_null()) cause = parse_cause(meta.at("cause").get<std::string>());
    d.label = make_label(parse_class(meta.at("class").get<std::string>()), cause);
    d.event_start_index = meta.at("event_start_index").get<Index>();
    d.sample_interval = meta.at("sample_interval_seconds").get<double>();
    d.pmu_ids = meta.at("pmu_ids").get<std::vector<std::string>>();
    for (const ChannelKind c : kAllChannels) {
      const std::string name(channel_name(c));
      const json& jc = meta.at("channels").at(name);
      ChannelDecomposition& cd = d.channel(c);
      const Index k = jc.at("rank").get<Index>();
      for (const auto& l : jc.at("labels")) cd.signatures.labels.push_back(parse_block(l.get<std::string>()));
      cd.signatures.basis = parse_matrix_csv(dir / (name + "_signatures.csv"), k, nullptr).transpose();
      std::vector<std::string> keys;
      cd.participation = parse_matrix_csv(dir / (name + "_participation.csv"), k, &keys);
      if (keys != d.pmu_ids) throw ValidationError(dir.string() + ": participation rows do not match pmu_ids");
      cd.residual = Matrix::Zero(cd.participation.rows(), cd.signatures.length());
    }
  } catch (const json::exception& e) {
    throw ValidationError(dir.string() + "/decomposition.json: " + e.what());
  }
  return d;
}

}  // namespace pmuforge::ep
