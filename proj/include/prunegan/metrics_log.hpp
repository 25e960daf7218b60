// Copyright 2026 The prunegan Authors. All Rights Reserved.
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

// Append-only JSON-lines metrics log. One record per training step; a
// truncated final line (from a crash) is ignored on read.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prunegan/errors.hpp"

namespace prunegan {

struct MetricsRecord {
  std::int64_t step = 0;
  std::map<std::string, double> scalars;
  double wall_time = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

inline nlohmann::json to_json(const MetricsRecord& r) {
  nlohmann::json j = {{"step", r.step}, {"wall_time", r.wall_time}};
  j["scalars"] = nlohmann::json::object();
  for (const auto& [k, v] : r.scalars) j["scalars"][k] = v;
  return j;
}

inline MetricsRecord metrics_record_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  r.step = j.at("step").get<std::int64_t>();
  r.wall_time = j.value("wall_time", 0.0);
  for (const auto& [k, v] : j.at("scalars").items()) r.scalars[k] = v.get<double>();
  return r;
}

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path, bool append = false) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw IoError("cannot open metrics log " + path.string());
  }

  void write(const MetricsRecord& r) {
    if (last_step_ && r.step <= *last_step_) {
      throw ValidationError("metrics steps must increase: " + std::to_string(r.step) +
                            " after " + std::to_string(*last_step_));
    }
    out_ << to_json(r).dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
    last_step_ = r.step;
  }

  void set_last_step(std::int64_t step) { last_step_ = step; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::optional<std::int64_t> last_step_;
};

inline std::vector<MetricsRecord> read_metrics_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read metrics log " + path.string());
  std::vector<MetricsRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(metrics_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed record: " +
                    e.what());
    }
  }
  return out;
}

/// Rewrites the log keeping only records with step < `step`.
inline void truncate_metrics_log(const std::filesystem::path& path, std::int64_t step) {
  if (!std::filesystem::exists(path)) return;
  auto records = read_metrics_log(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot rewrite metrics log " + path.string());
  for (const auto& r : records) {
    if (r.step < step) out << to_json(r).dump() << '\n';
  }
}

}  // namespace prunegan
