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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "prunegan/config.hpp"

namespace prunegan {
namespace {

std::filesystem::path write_config(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "prunegan_config_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

TEST(ParseConfig, MinimalConfigFillsDefaults) {
  const auto m = parse_config(write_config("min.json", R"({"task": "dcgan-mnist", "recipe": "b"})"));
  EXPECT_EQ(m.task, "dcgan-mnist");
  EXPECT_EQ(m.strategy.recipe_id, 'b');
  EXPECT_EQ(m.weights.lambda, 0.5);
  EXPECT_EQ(m.weights.epsilon, 1e-8);
  EXPECT_EQ(m.sparsity, 0.5);
  EXPECT_EQ(m.total_steps, 140);
  EXPECT_EQ(m.schedule.initial, 0.05);
  EXPECT_EQ(m.schedule.final_sparsity, 0.5);
  EXPECT_EQ(m.schedule.step_end, 70);
  EXPECT_EQ(m.schedule.update_interval, 1);
}

TEST(ParseConfig, UnknownRecipeRejected) {
  EXPECT_THROW(manifest_from_json(json{{"recipe", "z"}}), ConfigError);
}

TEST(ParseConfig, SparsityOutOfRangeRejected) {
  try {
    manifest_from_json(json{{"sparsity", 1.5}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sparsity"), std::string::npos);
  }
}

TEST(ParseConfig, UnknownKeyAndWrongTypeNamed) {
  try {
    manifest_from_json(json{{"sparsity_target", 0.5}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sparsity_target"), std::string::npos);
  }
  try {
    manifest_from_json(json{{"training", {{"batch_size", "big"}}}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("training.batch_size"), std::string::npos);
  }
}

TEST(ParseConfig, MissingFileIsConfigError) {
  EXPECT_THROW(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST(ParseConfig, BudgetFollowsRecipe) {
  const json training{{"baseline_steps", 1000}};
  EXPECT_EQ(manifest_from_json(json{{"recipe", "b"}, {"training", training}}).total_steps, 100);
  EXPECT_EQ(manifest_from_json(json{{"recipe", "f"}, {"training", training}}).total_steps, 1000);
  EXPECT_EQ(manifest_from_json(json{{"recipe", "a"}}).sparsity, 0.0);
  EXPECT_EQ(manifest_from_json(json{{"recipe", "d"}}).schedule.kind, ScheduleKind::OneShot);
}

TEST(ParseConfig, ExtractorDefaultsByTask) {
  EXPECT_EQ(manifest_from_json(json{{"task", "ring2d"}}).extractor, "identity");
  EXPECT_EQ(manifest_from_json(json{{"task", "dcgan-mnist-28"}}).extractor, "mnist-cls-v1");
}

TEST(Manifest, JsonRoundTrip) {
  auto m = manifest_from_json(json{{"task", "ring2d"},
                                   {"recipe", "h"},
                                   {"seed", 4},
                                   {"sparsity", 0.75},
                                   {"granularity", "kernel"},
                                   {"consistency", {{"lambda", 0.25}}},
                                   {"training", {{"baseline_steps", 300}, {"batch_size", 32}}}});
  const auto back = manifest_from_json(to_json(m));
  EXPECT_EQ(back, m);
}

}  // namespace
}  // namespace prunegan
