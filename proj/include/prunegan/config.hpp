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

// Experiment manifests: JSON configuration with strict key checking and
// fully expanded defaults.
//
// Minimal config: {"task": "dcgan-mnist-28", "recipe": "b"}. Everything else
// defaults: lambda 0.5, 50% element sparsity, a 5% -> target ramp reaching
// the target halfway through the run, a compression budget of 10% of the
// baseline steps.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "prunegan/consistency.hpp"
#include "prunegan/errors.hpp"
#include "prunegan/models.hpp"
#include "prunegan/nn/optim.hpp"
#include "prunegan/pruning.hpp"
#include "prunegan/schedule.hpp"
#include "prunegan/strategy.hpp"

namespace prunegan {

using json = nlohmann::json;

struct TrainingOptions {
  int batch_size = 64;
  /// Length of dense baseline training; random-init recipes train this long.
  std::int64_t baseline_steps = 1400;
  /// Compression runs last floor(budget_fraction * baseline_steps) steps.
  double budget_fraction = 0.10;
  nn::AdamOptions generator_optimizer;
  nn::AdamOptions discriminator_optimizer;

  bool operator==(const TrainingOptions&) const = default;
};

struct ExperimentManifest {
  std::string task = "dcgan-mnist-28";
  StrategyConfig strategy = resolve_strategy("b");
  std::uint64_t seed = 0;
  double sparsity = 0.5;
  Granularity granularity = Granularity::Element0D;
  /// Resolved schedule (derived from sparsity and total_steps unless given).
  SparsitySchedule schedule;
  ConsistencyWeights weights;
  TrainingOptions training;
  /// Number of steps this run executes.
  std::int64_t total_steps = 0;
  /// Checkpoint every N steps (0: only at completion).
  std::int64_t checkpoint_every = 0;
  std::string dense_checkpoint;
  std::string data_dir;
  std::string out_dir = "runs/default";
  std::string extractor = "mnist-cls-v1";
  int fid_samples = 10000;

  bool operator==(const ExperimentManifest&) const = default;
};

/// Steps a recipe runs for under a training configuration.
inline std::int64_t budget_steps(const StrategyConfig& s, const TrainingOptions& t) {
  if (s.trains_from_scratch()) return t.baseline_steps;
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(t.budget_fraction * t.baseline_steps + 1e-9)));
}

namespace detail {

inline const char* type_name(const json& j) {
  if (j.is_number_integer()) return "integer";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_boolean()) return "boolean";
  if (j.is_object()) return "object";
  if (j.is_array()) return "array";
  return "null";
}

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& context) {
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) {
      throw ConfigError("unknown config key '" + context + k + "'");
    }
  }
}

inline void expect(const json& j, bool ok, const std::string& key, const char* expected) {
  if (!ok) {
    throw ConfigError("config key '" + key + "' must be " + expected + ", got " + type_name(j));
  }
}

inline double get_number(const json& obj, const std::string& key, const std::string& path,
                         double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  expect(v, v.is_number(), path + key, "a number");
  return v.get<double>();
}

inline std::int64_t get_int(const json& obj, const std::string& key, const std::string& path,
                            std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  expect(v, v.is_number_integer(), path + key, "an integer");
  return v.get<std::int64_t>();
}

inline std::string get_string(const json& obj, const std::string& key, const std::string& path,
                              const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  expect(v, v.is_string(), path + key, "a string");
  return v.get<std::string>();
}

inline bool get_bool(const json& obj, const std::string& key, const std::string& path,
                     bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  expect(v, v.is_boolean(), path + key, "a boolean");
  return v.get<bool>();
}

inline std::map<std::string, double> get_weight_map(const json& obj, const std::string& key,
                                                    const std::string& path,
                                                    std::map<std::string, double> fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  expect(v, v.is_object(), path + key, "an object of numbers");
  std::map<std::string, double> out;
  for (const auto& [k, w] : v.items()) {
    expect(w, w.is_number(), path + key + "." + k, "a number");
    out[k] = w.get<double>();
  }
  return out;
}

inline void check_fraction(double v, const std::string& key) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ConfigError("config key '" + key + "' = " + std::to_string(v) +
                      " is out of range [0, 1]");
  }
}

}  // namespace detail

inline json to_json(const SparsitySchedule& s) {
  return {{"kind", std::string(to_string(s.kind))},
          {"initial", s.initial},
          {"final", s.final_sparsity},
          {"step_begin", s.step_begin},
          {"step_end", s.step_end},
          {"update_interval", s.update_interval}};
}

inline json to_json(const StrategyConfig& s) {
  return {{"recipe", std::string(1, s.recipe_id)},
          {"title", s.title},
          {"student_generator_init", std::string(to_string(s.student_generator_init))},
          {"student_generator_pruned", s.student_generator_pruned},
          {"pruning_kind", std::string(to_string(s.pruning_kind))},
          {"keep_teacher_generator", s.keep_teacher_generator},
          {"discriminator_init", std::string(to_string(s.discriminator_init))},
          {"discriminator_fixed", s.discriminator_fixed},
          {"discriminator_pruned", s.discriminator_pruned},
          {"active_losses",
           {{"L-Gc", s.active_losses.gc},
            {"L-Dc", s.active_losses.dc},
            {"L-Go", s.active_losses.go},
            {"L-Do", s.active_losses.do_}}},
          {"extra", std::string(to_string(s.extra))},
          {"parameter_ratio", s.parameter_ratio}};
}

inline StrategyConfig strategy_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config key 'strategy' must be an object");
  detail::reject_unknown(j,
                         {"recipe", "title", "student_generator_init", "student_generator_pruned",
                          "pruning_kind", "keep_teacher_generator", "discriminator_init",
                          "discriminator_fixed", "discriminator_pruned", "active_losses", "extra",
                          "parameter_ratio"},
                         "strategy.");
  const std::string id = detail::get_string(j, "recipe", "strategy.", "");
  StrategyConfig s;
  try {
    s = resolve_strategy(id);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  // Every other field is a pure function of the recipe id; a stored copy must agree.
  if (to_json(s) != j) {
    throw ConfigError("strategy block does not match recipe '" + id + "'");
  }
  return s;
}

inline json to_json(const ExperimentManifest& m) {
  return {
      {"task", m.task},
      {"recipe", std::string(1, m.strategy.recipe_id)},
      {"strategy", to_json(m.strategy)},
      {"seed", m.seed},
      {"sparsity", m.sparsity},
      {"granularity", std::string(to_string(m.granularity))},
      {"schedule", to_json(m.schedule)},
      {"consistency",
       {{"lambda", m.weights.lambda},
        {"epsilon", m.weights.epsilon},
        {"generative_weights", m.weights.generative},
        {"discriminative_weights", m.weights.discriminative}}},
      {"training",
       {{"batch_size", m.training.batch_size},
        {"baseline_steps", m.training.baseline_steps},
        {"budget_fraction", m.training.budget_fraction},
        {"generator_lr", m.training.generator_optimizer.learning_rate},
        {"discriminator_lr", m.training.discriminator_optimizer.learning_rate},
        {"beta1", m.training.generator_optimizer.beta1},
        {"beta2", m.training.generator_optimizer.beta2}}},
      {"total_steps", m.total_steps},
      {"checkpoint_every", m.checkpoint_every},
      {"dense_checkpoint", m.dense_checkpoint},
      {"data_dir", m.data_dir},
      {"out_dir", m.out_dir},
      {"extractor", m.extractor},
      {"fid_samples", m.fid_samples},
  };
}

/// Validates a config document and expands every default.
inline ExperimentManifest manifest_from_json(const json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(j,
                 {"task", "recipe", "strategy", "seed", "sparsity", "granularity", "schedule",
                  "consistency", "training", "total_steps", "checkpoint_every",
                  "dense_checkpoint", "data_dir", "out_dir", "extractor", "fid_samples"},
                 "");
  ExperimentManifest m;
  m.task = get_string(j, "task", "", m.task);
  try {
    find_task(m.task);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  const std::string recipe = get_string(j, "recipe", "", "b");
  if (!is_recipe_id(recipe)) {
    throw ConfigError("config key 'recipe' = '" + recipe + "' is not one of a..n");
  }
  m.strategy = resolve_strategy(recipe);
  if (j.contains("strategy") && strategy_from_json(j.at("strategy")) != m.strategy) {
    throw ConfigError("strategy block does not match recipe '" + recipe + "'");
  }
  const std::int64_t seed = get_int(j, "seed", "", 0);
  if (seed < 0) throw ConfigError("config key 'seed' must be >= 0");
  m.seed = static_cast<std::uint64_t>(seed);
  m.sparsity = get_number(j, "sparsity", "", m.sparsity);
  check_fraction(m.sparsity, "sparsity");
  try {
    m.granularity = parse_granularity(get_string(j, "granularity", "", "element"));
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("consistency")) {
    const auto& c = j.at("consistency");
    expect(c, c.is_object(), "consistency", "an object");
    reject_unknown(c, {"lambda", "epsilon", "generative_weights", "discriminative_weights"},
                   "consistency.");
    m.weights.lambda = get_number(c, "lambda", "consistency.", m.weights.lambda);
    m.weights.epsilon = get_number(c, "epsilon", "consistency.", m.weights.epsilon);
    m.weights.generative =
        get_weight_map(c, "generative_weights", "consistency.", m.weights.generative);
    m.weights.discriminative =
        get_weight_map(c, "discriminative_weights", "consistency.", m.weights.discriminative);
  }
  try {
    m.weights.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("training")) {
    const auto& t = j.at("training");
    expect(t, t.is_object(), "training", "an object");
    reject_unknown(t,
                   {"batch_size", "baseline_steps", "budget_fraction", "generator_lr",
                    "discriminator_lr", "beta1", "beta2"},
                   "training.");
    auto& o = m.training;
    o.batch_size = static_cast<int>(get_int(t, "batch_size", "training.", o.batch_size));
    o.baseline_steps = get_int(t, "baseline_steps", "training.", o.baseline_steps);
    o.budget_fraction = get_number(t, "budget_fraction", "training.", o.budget_fraction);
    o.generator_optimizer.learning_rate =
        get_number(t, "generator_lr", "training.", o.generator_optimizer.learning_rate);
    o.discriminator_optimizer.learning_rate =
        get_number(t, "discriminator_lr", "training.", o.discriminator_optimizer.learning_rate);
    const double b1 = get_number(t, "beta1", "training.", o.generator_optimizer.beta1);
    const double b2 = get_number(t, "beta2", "training.", o.generator_optimizer.beta2);
    o.generator_optimizer.beta1 = o.discriminator_optimizer.beta1 = b1;
    o.generator_optimizer.beta2 = o.discriminator_optimizer.beta2 = b2;
    if (o.batch_size < 1) throw ConfigError("config key 'training.batch_size' must be >= 1");
    if (o.baseline_steps < 1) {
      throw ConfigError("config key 'training.baseline_steps' must be >= 1");
    }
    check_fraction(o.budget_fraction, "training.budget_fraction");
  }

  m.total_steps = get_int(j, "total_steps", "", budget_steps(m.strategy, m.training));
  if (m.total_steps < 1) throw ConfigError("config key 'total_steps' must be >= 1");

  if (!m.strategy.student_generator_pruned && !m.strategy.discriminator_pruned) {
    m.sparsity = 0.0;
  }
  m.schedule = m.strategy.pruning_kind == ScheduleKind::OneShot
                   ? one_shot_schedule(m.sparsity)
                   : gradual_schedule(m.sparsity, m.total_steps);
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    expect(s, s.is_object(), "schedule", "an object");
    reject_unknown(s, {"kind", "initial", "final", "step_begin", "step_end", "update_interval"},
                   "schedule.");
    try {
      m.schedule.kind = parse_schedule_kind(
          get_string(s, "kind", "schedule.", std::string(to_string(m.schedule.kind))));
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
    m.schedule.initial = get_number(s, "initial", "schedule.", m.schedule.initial);
    m.schedule.final_sparsity = get_number(s, "final", "schedule.", m.schedule.final_sparsity);
    m.schedule.step_begin = get_int(s, "step_begin", "schedule.", m.schedule.step_begin);
    m.schedule.step_end = get_int(s, "step_end", "schedule.", m.schedule.step_end);
    m.schedule.update_interval =
        get_int(s, "update_interval", "schedule.", m.schedule.update_interval);
    check_fraction(m.schedule.initial, "schedule.initial");
    check_fraction(m.schedule.final_sparsity, "schedule.final");
    if (m.schedule.final_sparsity != m.sparsity) {
      throw ConfigError("config key 'schedule.final' must equal 'sparsity'");
    }
  }
  try {
    m.schedule.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }

  m.checkpoint_every = get_int(j, "checkpoint_every", "", 0);
  if (m.checkpoint_every < 0) throw ConfigError("config key 'checkpoint_every' must be >= 0");
  m.dense_checkpoint = get_string(j, "dense_checkpoint", "", "");
  m.data_dir = get_string(j, "data_dir", "", "");
  m.out_dir = get_string(j, "out_dir", "", m.out_dir);
  m.extractor = get_string(j, "extractor", "", find_task(m.task).dataset == "ring2d"
                                                   ? "identity"
                                                   : "mnist-cls-v1");
  m.fid_samples = static_cast<int>(get_int(j, "fid_samples", "", m.fid_samples));
  if (m.fid_samples < 2) throw ConfigError("config key 'fid_samples' must be >= 2");
  return m;
}

/// True when the recipe needs a dense checkpoint to initialize from.
inline bool requires_dense_checkpoint(const StrategyConfig& s) {
  return s.student_generator_init == GeneratorInit::FromDense || s.keep_teacher_generator ||
         s.discriminator_init == DiscriminatorInit::Pretrained ||
         s.discriminator_init == DiscriminatorInit::PretrainedSparse;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline ExperimentManifest parse_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return manifest_from_json(read_json_file(path));
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace prunegan
