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

// Command implementations behind the CLI. Each takes a config document (the
// parsed --config file with command-line overrides applied) and writes its
// artifacts under the manifest's out_dir.

#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "prunegan/config.hpp"
#include "prunegan/engine.hpp"
#include "prunegan/evaluation.hpp"
#include "prunegan/extractor.hpp"
#include "prunegan/report.hpp"

namespace prunegan {

using Logger = std::function<void(const std::string&)>;

/// Command-line values that override config keys.
struct Overrides {
  std::optional<std::string> recipe;
  std::optional<double> sparsity;
  std::optional<std::string> granularity;
  std::optional<std::int64_t> seed;
  std::optional<std::int64_t> steps;
  std::optional<std::string> out_dir;
  std::optional<std::string> extractor;
  std::optional<std::string> dense_checkpoint;
};

inline json apply_overrides(json config, const Overrides& o) {
  if (!config.is_object()) throw ConfigError("config root must be an object");
  if (o.recipe) config["recipe"] = *o.recipe;
  if (o.sparsity) config["sparsity"] = *o.sparsity;
  if (o.granularity) config["granularity"] = *o.granularity;
  if (o.seed) config["seed"] = *o.seed;
  if (o.steps) config["total_steps"] = *o.steps;
  if (o.out_dir) config["out_dir"] = *o.out_dir;
  if (o.extractor) config["extractor"] = *o.extractor;
  if (o.dense_checkpoint) config["dense_checkpoint"] = *o.dense_checkpoint;
  // A stored strategy block would pin the previous recipe.
  if (o.recipe) config.erase("strategy");
  return config;
}

inline json load_config_document(const std::optional<std::string>& path) {
  if (!path) return json::object();
  if (!std::filesystem::exists(*path)) throw ConfigError("config file not found: " + *path);
  return read_json_file(*path);
}

/// Dense baseline: recipe (a) for the configured baseline length.
inline CompressionResult command_train(json config, const Logger& log = {}) {
  config["recipe"] = "a";
  config.erase("strategy");
  const ExperimentManifest m = manifest_from_json(config);
  RunOptions opt;
  opt.log = log;
  return run_compression(m, opt);
}

inline CompressionResult command_compress(const json& config, const Logger& log = {}) {
  const ExperimentManifest m = manifest_from_json(config);
  RunOptions opt;
  opt.log = log;
  return run_compression(m, opt);
}

/// Real-image statistics under an extractor, for the manifest's task.
struct Reference {
  FeatureExtractor extractor;
  FrechetStats real;
};

inline Reference load_reference(const ExperimentManifest& m, const Logger& log = {}) {
  const TaskSpec& task = find_task(m.task);
  const auto data_dir = resolve_data_dir(m);
  Reference ref{load_extractor(m.extractor, task.image_shape(1), data_dir, default_cache_dir(), log),
                {}};
  const Dataset train = load_dataset(task, Split::Train, 0, data_dir);
  ref.real = real_stats(train, ref.extractor);
  return ref;
}

/// Evaluates <out_dir>/checkpoint.ckpt (or `checkpoint`) and writes
/// <out_dir>/evaluation.json.
inline EvaluationResult command_evaluate(const json& config,
                                         const std::optional<std::string>& checkpoint = {},
                                         const Logger& log = {},
                                         Reference* reference = nullptr) {
  const ExperimentManifest m = manifest_from_json(config);
  const std::filesystem::path out(m.out_dir);
  const std::filesystem::path ck_path =
      checkpoint ? std::filesystem::path(*checkpoint) : out / "checkpoint.ckpt";
  if (!std::filesystem::exists(ck_path)) {
    throw ConfigError("checkpoint not found: " + ck_path.string() + " (run compress first)");
  }
  const Checkpoint ck = load_checkpoint(ck_path);
  std::optional<Checkpoint> dense;
  if (!m.dense_checkpoint.empty()) dense = load_dense_checkpoint(m);
  std::optional<Reference> own;
  if (!reference) {
    own = load_reference(m, log);
    reference = &*own;
  }
  const EvaluationResult r = evaluate_checkpoint(ck, dense ? &*dense : nullptr,
                                                 reference->extractor, reference->real,
                                                 {m.fid_samples, m.seed});
  std::filesystem::create_directories(out);
  write_json_file(out / "resolved_manifest.json", to_json(m));
  write_json_file(out / "evaluation.json", to_json(r));
  return r;
}

inline std::vector<std::string> split_recipes(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (!is_recipe_id(item)) {
      throw ConfigError("unknown recipe '" + item + "' in --recipes (expected a..n)");
    }
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("--recipes lists no recipe");
  return out;
}

/// Runs and evaluates each recipe under <out_dir>/<recipe>. Recipes that need
/// a dense model share one baseline, trained into <out_dir>/dense unless the
/// config names a dense checkpoint. Writes compare.csv / compare.json.
inline std::vector<ReportRow> command_compare(json config, const std::vector<std::string>& recipes,
                                              const Logger& log = {}) {
  config.erase("strategy");
  config["recipe"] = recipes.front();
  const ExperimentManifest base = manifest_from_json(config);
  const std::filesystem::path out(base.out_dir);
  std::filesystem::create_directories(out);

  std::string dense_path = base.dense_checkpoint;
  if (dense_path.empty()) {
    json dense_cfg = config;
    dense_cfg["out_dir"] = (out / "dense").string();
    dense_cfg.erase("total_steps");
    if (log) log("training dense baseline into " + (out / "dense").string());
    dense_path = command_train(dense_cfg, log).checkpoint.string();
  }

  json ref_cfg = config;
  ref_cfg["dense_checkpoint"] = dense_path;
  Reference reference = load_reference(manifest_from_json(ref_cfg), log);

  std::vector<ReportRow> rows;
  for (const auto& r : recipes) {
    json cfg = config;
    cfg["recipe"] = r;
    cfg["out_dir"] = (out / r).string();
    cfg["dense_checkpoint"] = dense_path;
    if (log) log("recipe " + r + ": " + describe(resolve_strategy(r)));
    const ExperimentManifest m = manifest_from_json(cfg);
    run_compression(m, RunOptions{true, log, {}});
    const auto eval = command_evaluate(cfg, std::nullopt, log, &reference);
    rows.push_back(report_row(m, to_json(eval)));
  }
  write_text_file(out / "compare.csv", comparison_csv(rows));
  write_text_file(out / "compare.json", comparison_json(rows).dump(2) + "\n");
  write_json_file(out / "resolved_manifest.json", to_json(base));
  return rows;
}

}  // namespace prunegan
