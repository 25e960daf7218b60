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

// Acceptance run. Prints one PASS/FAIL line per criterion and writes the
// measured numbers to <out>/results.json. Exit status is nonzero when any
// criterion fails.
//
//   1  relative FID change of recipe b at 50% element sparsity, median <= +10%
//   2  median FID of b <= median FID of each of c, d, f
//   3  filter-granularity degradation >= element-granularity degradation
//   4  schedule suite
//   5  mask suite
//   6  loss suite
//   7  metric suite
//   8  engine suite: frozen teacher, masked zeros, determinism, checkpoint round trip

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "prunegan/commands.hpp"
#include "property_suites.hpp"

namespace {

using namespace prunegan;
namespace fs = std::filesystem;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ", ") + fmt::format("{:.4f}", x);
  return "[" + out + "]";
}

struct Line {
  int id;
  bool pass;
  std::string text;
};

void print(const Line& l) {
  std::cout << "CRITERION " << l.id << " " << (l.pass ? "PASS" : "FAIL") << ": " << l.text
            << std::endl;
}

struct Options {
  int seeds = 3;
  int epochs = 15;
  std::string out = "acceptance";
  std::int64_t engine_steps = 500;
  bool skip_desk = false;
};

/// Per-seed FIDs of every run used by criteria 1 to 3.
struct SeedRuns {
  double dense = 0.0;
  std::map<std::string, double> fid;
};

json base_config(int seed, std::int64_t baseline_steps) {
  return {{"task", "dcgan-mnist-28"},
          {"seed", seed},
          {"sparsity", 0.5},
          {"training", {{"baseline_steps", baseline_steps}}}};
}

SeedRuns run_seed(const Options& o, int seed, std::int64_t baseline_steps, Reference& ref,
                  const Logger& log) {
  const fs::path dir = fs::path(o.out) / ("seed" + std::to_string(seed));
  json cfg = base_config(seed, baseline_steps);
  cfg["out_dir"] = (dir / "dense").string();
  log("seed " + std::to_string(seed) + ": dense baseline, " + std::to_string(baseline_steps) +
      " steps");
  const auto dense = command_train(cfg);

  SeedRuns out;
  struct Run {
    std::string name;
    std::string recipe;
    std::string granularity;
  };
  const std::vector<Run> runs = {{"b", "b", "element"},
                                 {"b_filter", "b", "filter"},
                                 {"c", "c", "element"},
                                 {"d", "d", "element"},
                                 {"f", "f", "element"}};
  for (const auto& r : runs) {
    json rc = base_config(seed, baseline_steps);
    rc["recipe"] = r.recipe;
    rc["granularity"] = r.granularity;
    rc["out_dir"] = (dir / r.name).string();
    rc["dense_checkpoint"] = dense.checkpoint.string();
    const auto m = manifest_from_json(rc);
    log("seed " + std::to_string(seed) + ": " + r.name + ", " + std::to_string(m.total_steps) +
        " steps");
    run_compression(m);
    const auto eval = command_evaluate(rc, std::nullopt, {}, &ref);
    out.fid[r.name] = eval.fid;
    out.dense = *eval.fid_dense;
    log(fmt::format("seed {}: {} fid {:.3f} dense {:.3f} rel {:+.4f}", seed, r.name, eval.fid,
                    *eval.fid_dense, *eval.relative_change));
  }
  return out;
}

std::vector<Line> desk_criteria(const Options& o, json& results, const Logger& log) {
  const TaskSpec& task = find_task("dcgan-mnist-28");
  const Dataset train = load_dataset(task, Split::Train, 0, default_data_dir());
  const std::int64_t per_epoch = train.size() / TrainingOptions{}.batch_size;
  const std::int64_t baseline_steps = per_epoch * o.epochs;
  auto ref_manifest = manifest_from_json(base_config(0, baseline_steps));
  Reference ref = load_reference(ref_manifest, log);
  results["extractor"] = {{"id", ref.extractor.id()}, {"checksum", ref.extractor.checksum()}};
  results["baseline_steps"] = baseline_steps;
  results["train_images"] = train.size();

  std::map<std::string, std::vector<double>> fid;
  std::vector<double> rel_b, rel_filter;
  for (int s = 0; s < o.seeds; ++s) {
    const SeedRuns r = run_seed(o, s, baseline_steps, ref, log);
    fid["dense"].push_back(r.dense);
    for (const auto& [k, v] : r.fid) fid[k].push_back(v);
    rel_b.push_back((r.fid.at("b") - r.dense) / r.dense);
    rel_filter.push_back((r.fid.at("b_filter") - r.dense) / r.dense);
  }
  for (const auto& [k, v] : fid) results["fid"][k] = v;
  results["relative_change"] = {{"b_element", rel_b}, {"b_filter", rel_filter}};

  std::vector<Line> lines;
  const double med_rel = median(rel_b);
  lines.push_back({1, med_rel <= 0.10,
                   fmt::format("recipe b 50% element, median relative FID change {:+.4f} "
                               "(limit +0.10); per seed {}; dense FID {}",
                               med_rel, join(rel_b), join(fid["dense"]))});
  const double mb = median(fid["b"]);
  bool ordered = true;
  std::string detail = fmt::format("median FID b {:.3f}", mb);
  for (const char* k : {"c", "d", "f"}) {
    const double mk = median(fid[k]);
    ordered = ordered && mb <= mk;
    detail += fmt::format(", {} {:.3f}", k, mk);
  }
  lines.push_back({2, ordered, detail});
  const double mf = median(rel_filter);
  lines.push_back({3, mf >= med_rel,
                   fmt::format("median degradation filter {:+.4f} vs element {:+.4f}; filter per "
                               "seed {}",
                               mf, med_rel, join(rel_filter))});
  return lines;
}

Line suite_line(int id, const std::string& name, const suites::SuiteResult& r) {
  return {id, r.ok(), name + " " + r.summary()};
}

Line engine_criterion(const Options& o, json& results, const Logger& log) {
  suites::SuiteResult r;
  const fs::path dir = fs::path(o.out) / "engine";
  const fs::path dense_path = fs::path(o.out) / "seed0" / "dense" / "checkpoint.ckpt";
  json cfg = {{"task", "dcgan-mnist-28"}, {"sparsity", 0.5}};
  if (!fs::exists(dense_path)) {
    log("engine suite: training a short dense model");
    json d = cfg;
    d["out_dir"] = (dir / "dense").string();
    d["total_steps"] = 200;
    command_train(d);
  }
  const std::string dense = fs::exists(dense_path) ? dense_path.string()
                                                   : (dir / "dense" / "checkpoint.ckpt").string();

  // Long run: teacher checksum and masked zeros after every step.
  json long_cfg = cfg;
  long_cfg["recipe"] = "b";
  long_cfg["total_steps"] = o.engine_steps;
  long_cfg["dense_checkpoint"] = dense;
  long_cfg["out_dir"] = (dir / "long").string();
  const auto m = manifest_from_json(long_cfg);
  const Checkpoint dense_ck = load_checkpoint(dense);
  const Dataset train = load_dataset(find_task(m.task), Split::Train, 0, default_data_dir());
  const std::uint32_t teacher_initial = CompressionSession(m, train, &dense_ck).teacher_checksum();
  std::int64_t teacher_changes = 0;
  std::size_t masked_violations = 0;
  std::int64_t steps_seen = 0;
  RunOptions opt;
  opt.resume = false;
  opt.on_step = [&](const CompressionSession& s, const StepReport&) {
    ++steps_seen;
    if (s.teacher_checksum() != teacher_initial) ++teacher_changes;
    auto& session = const_cast<CompressionSession&>(s);
    for (const auto& [name, mask] : s.generator_masks()) {
      const auto& w = session.student().find(name)->value;
      for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (!mask.bits[i] && (w[i] != 0.0f || std::signbit(w[i]))) ++masked_violations;
      }
    }
  };
  log("engine suite: " + std::to_string(o.engine_steps) + "-step recipe b run");
  fs::remove_all(dir / "long");
  const auto long_run = run_compression(m, opt);
  r.check(steps_seen == o.engine_steps, "run executed " + std::to_string(steps_seen) + " steps");
  r.check(teacher_changes == 0,
          "teacher checksum changed at " + std::to_string(teacher_changes) + " steps");
  r.check(masked_violations == 0,
          std::to_string(masked_violations) + " nonzero weights at masked positions");

  // Run twice: identical metrics logs apart from wall time.
  std::vector<std::vector<MetricsRecord>> logs;
  for (const char* sub : {"twice_a", "twice_b"}) {
    json c = cfg;
    c["recipe"] = "b";
    c["dense_checkpoint"] = dense;
    c["out_dir"] = (dir / sub).string();
    fs::remove_all(dir / sub);
    const auto res = run_compression(manifest_from_json(c));
    auto records = read_metrics_log(res.metrics_log);
    for (auto& rec : records) rec.wall_time = 0.0;
    logs.push_back(std::move(records));
  }
  r.check(!logs[0].empty() && logs[0] == logs[1], "metrics logs of two identical runs differ");

  // Checkpoint round trip.
  const Checkpoint ck = load_checkpoint(long_run.checkpoint);
  const std::string bytes = serialize_checkpoint(ck);
  const Checkpoint back = deserialize_checkpoint(bytes, "memory");
  r.check(back == ck, "deserialized checkpoint differs");
  r.check(serialize_checkpoint(back) == bytes, "re-serialized bytes differ");
  const fs::path copy = dir / "roundtrip.ckpt";
  save_checkpoint(back, copy);
  r.check(load_checkpoint(copy) == ck, "disk round trip differs");

  results["engine"] = {{"steps", steps_seen},
                       {"teacher_checksum", teacher_initial},
                       {"masked_violations", masked_violations},
                       {"determinism_records", logs[0].size()}};
  return {8, r.ok(),
          fmt::format("teacher checksum {:08x} over {} steps, {} masked violations, run-twice "
                      "logs {} records; {}",
                      teacher_initial, steps_seen, masked_violations, logs[0].size(),
                      r.summary())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prunegan acceptance run"};
  Options o;
  app.add_option("--seeds", o.seeds, "Seeds for the desk-scale criteria");
  app.add_option("--epochs", o.epochs, "Baseline epochs (at most 15)");
  app.add_option("--out", o.out, "Artifact directory");
  app.add_option("--engine-steps", o.engine_steps, "Length of the engine-suite run");
  app.add_flag("--skip-desk", o.skip_desk, "Skip criteria 1 to 3");
  CLI11_PARSE(app, argc, argv);
  setenv("PRUNEGAN_DATA_DIR", PRUNEGAN_TEST_DATA_DIR, 0);
  setenv("PRUNEGAN_CACHE_DIR", PRUNEGAN_TEST_CACHE_DIR, 0);

  const auto start = std::chrono::steady_clock::now();
  const Logger log = [&](const std::string& s) {
    const double t =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << fmt::format("[{:7.1f}s] ", t) << s << std::endl;
  };
  fs::create_directories(o.out);
  json results = json::object();
  std::vector<Line> lines;
  try {
    if (!o.skip_desk) {
      for (const auto& l : desk_criteria(o, results, log)) lines.push_back(l);
    }
    lines.push_back(suite_line(4, "schedule suite", suites::schedule_suite()));
    lines.push_back(suite_line(5, "mask suite", suites::mask_suite()));
    lines.push_back(suite_line(6, "loss suite", suites::loss_suite()));
    lines.push_back(suite_line(7, "metric suite", suites::metric_suite()));
    lines.push_back(engine_criterion(o, results, log));
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << std::endl;
    for (const auto& l : lines) print(l);
    return 1;
  }
  bool all = true;
  for (const auto& l : lines) {
    print(l);
    all = all && l.pass;
    results["criteria"][std::to_string(l.id)] = {{"pass", l.pass}, {"detail", l.text}};
  }
  write_json_file(fs::path(o.out) / "results.json", results);
  return all ? 0 : 1;
}
