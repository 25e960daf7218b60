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
#include <sstream>

#include "prunegan/commands.hpp"

namespace prunegan {
namespace {

namespace fs = std::filesystem;

fs::path fresh(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("prunegan_cmd_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ring_config(const fs::path& out) {
  return {{"task", "ring2d"},
          {"training", {{"batch_size", 32}, {"baseline_steps", 200}}},
          {"fid_samples", 1000},
          {"out_dir", out.string()}};
}

TEST(Commands, OverridesReplaceConfigKeys) {
  Overrides o;
  o.recipe = "d";
  o.sparsity = 0.25;
  o.granularity = "filter";
  o.steps = 7;
  json base = {{"task", "ring2d"}, {"recipe", "b"}, {"strategy", to_json(resolve_strategy("b"))}};
  const auto m = manifest_from_json(apply_overrides(base, o));
  EXPECT_EQ(m.strategy.recipe_id, 'd');
  EXPECT_EQ(m.sparsity, 0.25);
  EXPECT_EQ(m.granularity, Granularity::Filter3D);
  EXPECT_EQ(m.total_steps, 7);
}

TEST(Commands, SplitRecipes) {
  EXPECT_EQ(split_recipes("a,b,c,d"), (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_THROW(split_recipes("a,zz"), ConfigError);
  EXPECT_THROW(split_recipes(","), ConfigError);
}

TEST(Commands, CompareWritesOneRowPerRecipe) {
  const auto out = fresh("compare");
  const auto rows = command_compare(ring_config(out), {"a", "b", "c", "d"});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].recipe, "a");
  EXPECT_EQ(rows[3].recipe, "d");
  for (const auto& r : rows) {
    EXPECT_TRUE(r.fid.has_value());
    EXPECT_TRUE(r.fid_dense.has_value());
  }
  // Recipe a reruns the baseline with the same seed: identical weights.
  EXPECT_EQ(*rows[0].fid, *rows[0].fid_dense);
  EXPECT_EQ(rows[1].steps, 20);
  EXPECT_NEAR(rows[1].sparsity, 0.5, 0.02);
  const auto csv = slurp(out / "compare.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_TRUE(fs::exists(out / "dense" / "checkpoint.ckpt"));
  EXPECT_TRUE(fs::exists(out / "resolved_manifest.json"));
  EXPECT_EQ(read_json_file(out / "compare.json").size(), 4u);
}

TEST(Commands, ReportIsAPureFunctionOfTheRun) {
  const auto out = fresh("report");
  auto cfg = ring_config(out / "dense");
  command_train(cfg);
  cfg["recipe"] = "b";
  cfg["out_dir"] = (out / "b").string();
  cfg["dense_checkpoint"] = (out / "dense" / "checkpoint.ckpt").string();
  command_compress(cfg);
  command_evaluate(cfg);
  const auto first = write_run_report(out / "b");
  std::map<std::string, std::string> bytes;
  for (const auto& f : first) bytes[f.filename().string()] = slurp(f);
  for (const auto& f : first) fs::remove(f);
  const auto second = write_run_report(out / "b");
  ASSERT_EQ(first, second);
  for (const auto& f : second) EXPECT_EQ(bytes.at(f.filename().string()), slurp(f)) << f;
  EXPECT_TRUE(bytes.count("loss_curve.svg"));
  EXPECT_EQ(slurp(out / "b" / "report" / "fid_table.csv").substr(0, 31),
            "model,granularity,sparsity,fid\n");
}

TEST(Commands, EvaluateWithoutCheckpointIsConfigError) {
  const auto out = fresh("noeval");
  EXPECT_THROW(command_evaluate(ring_config(out)), ConfigError);
}

TEST(Commands, TrainIgnoresConfiguredRecipe) {
  const auto out = fresh("train");
  auto cfg = ring_config(out);
  cfg["recipe"] = "b";
  cfg["total_steps"] = 5;
  const auto r = command_train(cfg);
  EXPECT_EQ(r.steps, 5);
  EXPECT_EQ(read_json_file(r.resolved_manifest).at("recipe"), "a");
}

}  // namespace
}  // namespace prunegan
