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

#include "pmuforge/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "pmuforge/errors.hpp"

namespace pmuforge::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void fail_row(const fs::path& file, std::size_t line, const std::string& what) {
  throw ValidationError(file.string() + ":" + std::to_string(line) + ": " + what);
}

EventTensor read_event_csv(const fs::path& file, const std::string& event_id, Index n_samples) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open event file " + file.string() + " (event '" + event_id + "')");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail_row(file, 1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) fail_row(file, line_no, "header must be exactly '" + std::string(kCsvHeader) + "'");

  struct PmuRows {
    std::array<std::vector<double>, kChannelCount> values;
    std::array<std::vector<bool>, kChannelCount> valid;
    std::vector<bool> seen;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, PmuRows> rows;
  const auto n = static_cast<std::size_t>(n_samples);

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 6) fail_row(file, line_no, "expected 6 fields, found " + std::to_string(fields.size()));
    if (fields[0].empty()) fail_row(file, line_no, "empty pmu_id");
    long long t_index = -1;
    const auto t_res = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), t_index);
    if (t_res.ec != std::errc() || t_res.ptr != fields[1].data() + fields[1].size()) {
      fail_row(file, line_no, "malformed t_index '" + std::string(fields[1]) + "'");
    }
    if (t_index < 0 || t_index >= n_samples) {
      fail_row(file, line_no, "t_index " + std::to_string(t_index) + " outside [0, " + std::to_string(n_samples) + ")");
    }
    const std::string pmu(fields[0]);
    auto [it, inserted] = rows.try_emplace(pmu);
    PmuRows& r = it->second;
    if (inserted) {
      order.push_back(pmu);
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        r.values[c].assign(n, std::numeric_limits<double>::quiet_NaN());
        r.valid[c].assign(n, false);
      }
      r.seen.assign(n, false);
    }
    const auto t = static_cast<std::size_t>(t_index);
    if (r.seen[t]) {
      fail_row(file, line_no, "duplicate row for (pmu_id=" + pmu + ", t_index=" + std::to_string(t_index) + ")");
    }
    r.seen[t] = true;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const std::string_view f = fields[2 + c];
      if (f.empty()) continue;
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
        fail_row(file, line_no, "malformed value '" + std::string(f) + "'");
      }
      if (!std::isfinite(v)) continue;
      r.values[c][t] = v;
      r.valid[c][t] = true;
    }
  }
  if (order.empty()) throw ValidationError(file.string() + ": no data rows (event '" + event_id + "')");

  EventTensor e;
  e.event_id = event_id;
  e.pmu_ids = order;
  const auto n_pmu = static_cast<Index>(order.size());
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    e.data[c].resize(n_pmu, n_samples);
    e.mask[c].resize(n_pmu, n_samples);
    for (Index i = 0; i < n_pmu; ++i) {
      const PmuRows& r = rows.at(order[static_cast<std::size_t>(i)]);
      for (Index t = 0; t < n_samples; ++t) {
        e.data[c](i, t) = r.values[c][static_cast<std::size_t>(t)];
        e.mask[c](i, t) = r.valid[c][static_cast<std::size_t>(t)];
      }
    }
  }
  return e;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string file_stem_for(std::string_view event_id) {
  std::string out;
  out.reserve(event_id.size());
  for (const char c : event_id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "event";
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

Dataset ingest_csv(const fs::path& root, const WindowConfig& window) {
  if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + root.string());
  const fs::path manifest_path = root / kManifestName;
  if (!fs::exists(manifest_path)) throw IoError("missing manifest " + manifest_path.string());
  const json manifest = read_json_file(manifest_path);
  if (!manifest.is_array()) throw ValidationError(manifest_path.string() + ": manifest must be a JSON array");

  Dataset ds;
  const fs::path prov_path = root / kProvenanceName;
  if (fs::exists(prov_path)) {
    const json prov = read_json_file(prov_path);
    if (prov.contains("dataset_provenance")) {
      ds.provenance = parse_provenance(prov.at("dataset_provenance").get<std::string>());
    }
  }

  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const json& rec = manifest[i];
    const std::string where = manifest_path.string() + " record " + std::to_string(i) + ": ";
    try {
      const auto event_id = rec.at("event_id").get<std::string>();
      const auto file = rec.at("file").get<std::string>();
      const EventClass cls = parse_class(rec.at("class").get<std::string>());
      std::optional<Cause> cause;
      if (rec.contains("cause") && !rec.at("cause").is_null()) cause = parse_cause(rec.at("cause").get<std::string>());
      const Index n_samples = rec.contains("n_samples") ? rec.at("n_samples").get<Index>() : window.length;
      const fs::path data_path = root / file;
      if (!fs::exists(data_path)) {
        throw IoError("event '" + event_id + "' listed in manifest but " + data_path.string() + " does not exist");
      }
      EventTensor e = read_event_csv(data_path, event_id, n_samples);
      e.label = make_label(cls, cause);
      e.event_start_index = rec.value("event_start_index", window.event_index);
      e.sample_interval = rec.value("sample_interval_seconds", kDefaultSampleInterval);
      validate(e);
      if (ds.find(event_id) != nullptr) throw ValidationError("duplicate event_id '" + event_id + "'");
      ds.events.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ValidationError(where + ex.what());
    }
  }
  return ds;
}

void export_dataset(const Dataset& dataset, const fs::path& root, const json& extra_provenance) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());

  json manifest = json::array();
  for (const auto& e : dataset.events) {
    const std::string file = file_stem_for(e.event_id) + ".csv";
    std::string text;
    text.reserve(static_cast<std::size_t>(e.n_pmu() * e.n_samples()) * 64);
    text += kCsvHeader;
    text += '\n';
    for (Index i = 0; i < e.n_pmu(); ++i) {
      for (Index t = 0; t < e.n_samples(); ++t) {
        text += e.pmu_ids[static_cast<std::size_t>(i)];
        text += ',';
        text += std::to_string(t);
        for (std::size_t c = 0; c < kChannelCount; ++c) {
          text += ',';
          if (e.mask[c](i, t)) text += format_double(e.data[c](i, t));
        }
        text += '\n';
      }
    }
    write_text_file(root / file, text);
    json rec;
    rec["event_id"] = e.event_id;
    rec["file"] = file;
    rec["class"] = class_name(e.label.cls);
    rec["cause"] = e.label.cause ? json(cause_name(*e.label.cause)) : json(nullptr);
    rec["event_start_index"] = e.event_start_index;
    rec["sample_interval_seconds"] = e.sample_interval;
    rec["n_samples"] = e.n_samples();
    manifest.push_back(std::move(rec));
  }
  write_json_file(root / kManifestName, manifest);

  json prov = json::object();
  prov["dataset_provenance"] = provenance_name(dataset.provenance);
  for (const auto& [key, value] : extra_provenance.items()) prov[key] = value;
  write_json_file(root / kProvenanceName, prov);
}

}  // namespace pmuforge::io
