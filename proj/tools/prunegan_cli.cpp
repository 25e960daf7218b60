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

// prunegan: dense training, compression, evaluation and reporting.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 config, 3 data, 4 numeric, 5 io.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "prunegan/commands.hpp"

namespace {

using namespace prunegan;

struct Args {
  std::optional<std::string> config;
  Overrides overrides;
  std::optional<std::string> checkpoint;
  std::string recipes;
  std::optional<std::string> run_dir;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--config", a.config, "JSON experiment config");
  cmd->add_option("--recipe", a.overrides.recipe, "Compression recipe a..n");
  cmd->add_option("--sparsity", a.overrides.sparsity, "Target sparsity in [0, 1]");
  cmd->add_option("--granularity", a.overrides.granularity, "Pruning unit")
      ->check(CLI::IsMember({"element", "vector", "kernel", "filter"}));
  cmd->add_option("--seed", a.overrides.seed, "Random seed");
  cmd->add_option("--steps", a.overrides.steps, "Number of steps to run");
  cmd->add_option("--out-dir", a.overrides.out_dir, "Output directory");
  cmd->add_option("--extractor", a.overrides.extractor, "Feature extractor id");
  cmd->add_option("--dense", a.overrides.dense_checkpoint, "Dense checkpoint");
  cmd->add_flag("--quiet", a.quiet, "Suppress progress output");
}

void print_evaluation(const EvaluationResult& r) {
  std::cout << to_json(r).dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised GAN generator pruning"};
  app.require_subcommand(1);
  Args a;

  auto* train = app.add_subcommand("train", "Train the dense baseline (recipe a)");
  auto* compress = app.add_subcommand("compress", "Run a compression recipe");
  auto* evaluate = app.add_subcommand("evaluate", "FID / PSNR / SSIM of a checkpoint");
  auto* compare = app.add_subcommand("compare", "Run and evaluate several recipes");
  auto* report = app.add_subcommand("report", "Write tables and charts for a run");
  auto* train_extractor =
      app.add_subcommand("train-extractor", "Train and cache the FID feature extractor");
  for (auto* cmd : {train, compress, evaluate, compare, report, train_extractor}) {
    add_common(cmd, a);
  }
  evaluate->add_option("--checkpoint", a.checkpoint, "Checkpoint (default <out-dir>/checkpoint.ckpt)");
  compare->add_option("--recipes", a.recipes, "Comma-separated recipes, e.g. a,b,c,d")->required();
  report->add_option("--run", a.run_dir, "Run directory (default <out-dir>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code_for(ErrorCategory::Config);
  }

  const Logger log = [&a](const std::string& line) {
    if (!a.quiet) std::cerr << line << "\n";
  };

  try {
    const json config = apply_overrides(load_config_document(a.config), a.overrides);
    if (*train) {
      const auto r = command_train(config, log);
      std::cout << r.checkpoint.string() << "\n";
    } else if (*compress) {
      const auto r = command_compress(config, log);
      std::cout << r.checkpoint.string() << "\n";
    } else if (*evaluate) {
      print_evaluation(command_evaluate(config, a.checkpoint, log));
    } else if (*compare) {
      const auto rows = command_compare(config, split_recipes(a.recipes), log);
      std::cout << comparison_csv(rows);
    } else if (*report) {
      const ExperimentManifest m = manifest_from_json(config);
      const std::filesystem::path run = a.run_dir ? *a.run_dir : m.out_dir;
      for (const auto& f : write_run_report(run)) std::cout << f.string() << "\n";
    } else if (*train_extractor) {
      const ExperimentManifest m = manifest_from_json(config);
      const TaskSpec& task = find_task(m.task);
      auto ex = load_extractor(m.extractor, task.image_shape(1), resolve_data_dir(m),
                               default_cache_dir(), log);
      std::cout << ex.id() << " checksum " << ex.checksum() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(ErrorCategory::Io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
