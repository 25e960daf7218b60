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

// Compression loop.
//
// One step, for every recipe:
//   1. recompute masks from current magnitudes when the schedule says so
//   2. run the student (and the frozen teacher) on the same latents
//   3. score real, teacher and student samples with the discriminator
//   4. build the term vectors G_O, G_C, D_O, D_C and compose objectives
//   5. update the student, then the discriminator if it trains
//   6. reapply masks so pruned positions are exactly +0.0
//
// For the unconditional toy tasks the generative vector holds one term,
// "gen" = BCE(D(G(z)), real), and the discriminative vector holds
// "dis" = BCE(D(y), real) + BCE(D(G(z)), fake). Both networks step on
// gradients from the same forward pass.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prunegan/checkpoint.hpp"
#include "prunegan/config.hpp"
#include "prunegan/consistency.hpp"
#include "prunegan/data.hpp"
#include "prunegan/errors.hpp"
#include "prunegan/metrics_log.hpp"
#include "prunegan/models.hpp"
#include "prunegan/nn/losses.hpp"
#include "prunegan/nn/network.hpp"
#include "prunegan/nn/optim.hpp"
#include "prunegan/pruning.hpp"
#include "prunegan/schedule.hpp"
#include "prunegan/strategy.hpp"

namespace prunegan {

inline constexpr std::uint64_t kLatentStream = 1;
inline constexpr std::uint64_t kDataStream = 2;
inline constexpr std::uint64_t kEvalStream = 3;

/// Task spec of the student; recipe (c) narrows the generator.
inline TaskSpec student_task_spec(const ExperimentManifest& m) {
  const TaskSpec& base = find_task(m.task);
  if (m.strategy.parameter_ratio == 1.0) return base;
  return with_generator_width(base, solve_width_scale(base, m.strategy.parameter_ratio));
}

struct StepReport {
  std::int64_t step = 0;
  std::map<std::string, double> scalars;

  bool operator==(const StepReport&) const = default;
};

class CompressionSession {
 public:
  /// `dense` supplies teacher / pretrained weights; required when the
  /// strategy initializes anything from a trained model.
  CompressionSession(ExperimentManifest manifest, const Dataset& train,
                     const Checkpoint* dense = nullptr)
      : manifest_(std::move(manifest)),
        task_(student_task_spec(manifest_)),
        train_(&train),
        stream_(train, manifest_.training.batch_size,
                stream_seed(manifest_.seed, kDataStream, 0)),
        g_opt_(manifest_.training.generator_optimizer),
        d_opt_(manifest_.training.discriminator_optimizer) {
    const auto& s = manifest_.strategy;
    manifest_.schedule.validate();
    manifest_.weights.validate();
    if (train.item_shape() != task_.image_shape(1)) {
      throw ValidationError("dataset items " + train.item_shape().str() +
                            " do not match task image shape " + task_.image_shape(1).str());
    }
    if (requires_dense_checkpoint(s) && dense == nullptr) {
      throw ConfigError("recipe '" + std::string(1, s.recipe_id) +
                        "' needs a dense checkpoint (dense_checkpoint)");
    }
    GanModels models = build_models(task_, manifest_.seed);
    student_ = std::move(models.generator);
    discriminator_ = std::move(models.discriminator);
    if (s.student_generator_init == GeneratorInit::FromDense) {
      import_network(student_, dense->parameters);
    }
    if (s.keep_teacher_generator) {
      teacher_ = nn::Network("G", find_task(manifest_.task).generator);
      import_network(*teacher_, dense->parameters);
    }
    if (s.discriminator_init == DiscriminatorInit::Pretrained ||
        s.discriminator_init == DiscriminatorInit::PretrainedSparse) {
      import_network(discriminator_, dense->parameters);
    }
    if (s.student_generator_pruned) {
      for (auto* p : student_.parameters()) {
        if (p->prunable) g_masks_[p->name] = PruningMask::ones(p->value.shape(), manifest_.granularity);
      }
    }
    if (s.discriminator_pruned) {
      for (auto* p : discriminator_.parameters()) {
        if (p->prunable) d_masks_[p->name] = PruningMask::ones(p->value.shape(), manifest_.granularity);
      }
    }
  }

  const ExperimentManifest& manifest() const { return manifest_; }
  const TaskSpec& task() const { return task_; }
  std::int64_t step_index() const { return step_; }
  nn::Network& student() { return student_; }
  nn::Network& discriminator() { return discriminator_; }
  const std::optional<nn::Network>& teacher() const { return teacher_; }
  const std::map<std::string, PruningMask>& generator_masks() const { return g_masks_; }
  const std::map<std::string, PruningMask>& discriminator_masks() const { return d_masks_; }

  std::uint32_t teacher_checksum() const {
    if (!teacher_) return 0;
    std::map<std::string, Tensor> params;
    export_network(*teacher_, params);
    return parameter_checksum(params);
  }

  Tensor latent_batch(std::int64_t step) const {
    return sample_latent(manifest_.training.batch_size, task_.latent_dim, manifest_.seed,
                         kLatentStream, static_cast<std::uint64_t>(step));
  }

  /// One step on the batch the data stream assigns to the current step.
  StepReport step() {
    return step(latent_batch(step_), stream_.batch(step_));
  }

  StepReport step(const Tensor& z, const Tensor& real) {
    const auto& s = manifest_.strategy;
    const auto& w = manifest_.weights;
    if (z.shape() != task_.generator_input(z.shape().n)) {
      throw ValidationError("latent batch " + z.shape().str() + " does not match task input " +
                            task_.generator_input(z.shape().n).str());
    }
    if (real.shape() != task_.image_shape(real.shape().n)) {
      throw ValidationError("real batch " + real.shape().str() + " does not match task images");
    }
    StepReport report;
    report.step = step_;

    const bool pruning = !g_masks_.empty() || !d_masks_.empty();
    if (pruning) {
      const double target = sparsity_at(manifest_.schedule, step_);
      if (should_update_mask(manifest_.schedule, step_)) {
        update_masks(student_, g_masks_, target);
        update_masks(discriminator_, d_masks_, target);
      }
      report.scalars["target_sparsity"] = target;
    }

    // Generators.
    const Tensor y_c = student_.forward(z);
    Tensor y_o;
    Tensor inter_c;
    Tensor inter_o;
    if (teacher_) {
      if (s.extra == ExtraObjective::IntermediateDistill) {
        inter_c = student_.activation(task_.intermediate_block);
      }
      y_o = teacher_->forward(z);
      if (s.extra == ExtraObjective::IntermediateDistill) {
        inter_o = teacher_->activation(task_.intermediate_block);
      }
    }

    // Discriminator scores; the student's fakes go last so that backward
    // through D sees their cached activations.
    TermValues values;
    const bool reads_d = s.reads_discriminator();
    const bool trains_d = s.trains_discriminator();
    const double w_dis = detail::term_weight(w.discriminative, "dis", "dis");
    std::optional<nn::LossValue> fake_c_real;
    std::optional<nn::LossValue> fake_c_fake;
    if (reads_d) {
      if (trains_d) discriminator_.zero_grad();
      const Tensor logits_real = discriminator_.forward(real);
      const auto real_loss = nn::bce_with_logits(logits_real, 1.0f);
      if (trains_d) discriminator_.backward(scaled(real_loss.grad, w_dis), true);
      if (teacher_) {
        const Tensor logits_o = discriminator_.forward(y_o);
        values["G_O"] = {{"gen", nn::bce_with_logits(logits_o, 1.0f).value}};
        values["D_O"] = {{"dis", real_loss.value + nn::bce_with_logits(logits_o, 0.0f).value}};
      }
      const Tensor logits_c = discriminator_.forward(y_c);
      fake_c_real = nn::bce_with_logits(logits_c, 1.0f);
      fake_c_fake = nn::bce_with_logits(logits_c, 0.0f);
      values["G_C"] = {{"gen", fake_c_real->value}};
      values["D_C"] = {{"dis", real_loss.value + fake_c_fake->value}};
    } else {
      // Without a discriminator the adversarial terms do not exist.
      values["G_C"] = {};
      if (teacher_) values["G_O"] = {};
    }

    std::optional<nn::LossValue> distill;
    if (s.extra == ExtraObjective::OutputDistill) {
      distill = nn::mse(y_c, y_o);
    } else if (s.extra == ExtraObjective::IntermediateDistill) {
      distill = nn::mse(inter_c, inter_o);
    }
    if (distill) values["distill"] = {{"distill", distill->value}};

    for (const char* group : {"G_C", "G_O", "D_C", "D_O", "distill"}) {
      auto it = values.find(group);
      if (it == values.end()) continue;
      for (const auto& [name, v] : it->second.terms) {
        const std::string key = group == name ? name : group + ("." + name);
        report.scalars[key] = v;
        if (!std::isfinite(v)) {
          throw NumericError("non-finite loss term " + key + " at step " +
                             std::to_string(step_));
        }
      }
    }

    const ComposedObjectives obj = compose_objectives(s, values, w);
    report.scalars["generator_objective"] = obj.generator;
    if (obj.l_gc) report.scalars["L_GC"] = *obj.l_gc;
    if (obj.l_dc) report.scalars["L_DC"] = *obj.l_dc;
    if (obj.l_gc || obj.l_dc) {
      report.scalars["L_Overall"] = overall_loss(obj.l_gc.value_or(0.0), obj.l_dc.value_or(0.0),
                                                 w.lambda);
    }
    if (obj.discriminator) report.scalars["discriminator_objective"] = *obj.discriminator;
    if (obj.discriminator.has_value() != trains_d) {
      throw ValidationError("discriminator objective disagrees with the strategy");
    }
    if (!std::isfinite(obj.generator)) {
      throw NumericError("non-finite generator objective at step " + std::to_string(step_));
    }

    // Student update.
    Tensor grad_y(y_c.shape());
    const double c_gen = coefficient(obj.d_generator_d_gc, "gen");
    const double c_dis = coefficient(obj.d_generator_d_dc, "dis");
    if (reads_d && (c_gen != 0.0 || c_dis != 0.0)) {
      Tensor g_logits(fake_c_real->grad.shape());
      for (std::size_t i = 0; i < g_logits.size(); ++i) {
        g_logits[i] = static_cast<float>(c_gen * fake_c_real->grad[i] +
                                         c_dis * fake_c_fake->grad[i]);
      }
      grad_y = discriminator_.backward(g_logits, false);
    }
    std::optional<nn::InjectedGradient> inject;
    if (distill && obj.d_generator_d_distill != 0.0) {
      const Tensor g = scaled(distill->grad, obj.d_generator_d_distill);
      if (s.extra == ExtraObjective::OutputDistill) {
        for (std::size_t i = 0; i < grad_y.size(); ++i) grad_y[i] += g[i];
      } else {
        inject = nn::InjectedGradient{task_.intermediate_block, g};
      }
    }
    student_.zero_grad();
    student_.backward(grad_y, true, inject);
    g_opt_.step(student_.parameters());
    reapply(student_, g_masks_);

    if (trains_d) {
      discriminator_.backward(scaled(fake_c_fake->grad, w_dis), true);
      d_opt_.step(discriminator_.parameters());
      reapply(discriminator_, d_masks_);
    }

    if (!g_masks_.empty()) report.scalars["sparsity"] = aggregate_sparsity(g_masks_);
    if (!d_masks_.empty()) report.scalars["discriminator_sparsity"] = aggregate_sparsity(d_masks_);
    if (!pruning) report.scalars["sparsity"] = 0.0;
    report.scalars["lr_G"] = g_opt_.options().learning_rate;
    if (trains_d) report.scalars["lr_D"] = d_opt_.options().learning_rate;
    ++step_;
    return report;
  }

  /// Student, discriminator, masks and optimizer state.
  Checkpoint to_checkpoint() const {
    Checkpoint ck;
    ck.manifest = to_json(manifest_);
    ck.step = step_;
    export_network(student_, ck.parameters);
    export_network(discriminator_, ck.parameters);
    export_optimizer(g_opt_, student_, "opt.G", ck);
    export_optimizer(d_opt_, discriminator_, "opt.D", ck);
    for (const auto& [k, m] : g_masks_) ck.masks[k] = m;
    for (const auto& [k, m] : d_masks_) ck.masks[k] = m;
    return ck;
  }

  /// Resumes from a checkpoint written by to_checkpoint.
  void restore(const Checkpoint& ck) {
    import_network(student_, ck.parameters);
    import_network(discriminator_, ck.parameters);
    import_optimizer(g_opt_, student_, "opt.G", ck);
    import_optimizer(d_opt_, discriminator_, "opt.D", ck);
    for (auto& [k, m] : g_masks_) m = ck.masks.at(k);
    for (auto& [k, m] : d_masks_) m = ck.masks.at(k);
    step_ = ck.step;
  }

 private:
  static Tensor scaled(const Tensor& t, double c) {
    Tensor out = t;
    if (c != 1.0) {
      for (auto& v : out.storage()) v = static_cast<float>(v * c);
    }
    return out;
  }

  static double coefficient(const LossTermVector& v, const std::string& name) {
    auto it = v.terms.find(name);
    return it == v.terms.end() ? 0.0 : it->second;
  }

  void update_masks(nn::Network& net, std::map<std::string, PruningMask>& masks, double target) {
    for (auto& [name, mask] : masks) {
      nn::Parameter* p = net.find(name);
      mask = magnitude_mask(WeightTensor{p->value, name}, manifest_.granularity, target);
      apply_mask_inplace(p->value, mask);
    }
  }

  static void reapply(nn::Network& net, const std::map<std::string, PruningMask>& masks) {
    for (const auto& [name, mask] : masks) apply_mask_inplace(net.find(name)->value, mask);
  }

  static double aggregate_sparsity(const std::map<std::string, PruningMask>& masks) {
    std::size_t zeros = 0;
    std::size_t total = 0;
    for (const auto& [k, m] : masks) {
      zeros += m.zero_count();
      total += m.bits.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
  }

  ExperimentManifest manifest_;
  TaskSpec task_;
  const Dataset* train_;
  BatchStream stream_;
  nn::Network student_;
  nn::Network discriminator_;
  std::optional<nn::Network> teacher_;
  nn::Adam g_opt_;
  nn::Adam d_opt_;
  std::map<std::string, PruningMask> g_masks_;
  std::map<std::string, PruningMask> d_masks_;
  std::int64_t step_ = 0;
};

struct RunOptions {
  /// Continue from <out_dir>/checkpoint.ckpt when present.
  bool resume = true;
  std::function<void(const std::string&)> log;
  /// Called after every step; used by tests to inspect the session.
  std::function<void(const CompressionSession&, const StepReport&)> on_step;
};

struct CompressionResult {
  std::filesystem::path checkpoint;
  std::filesystem::path metrics_log;
  std::filesystem::path resolved_manifest;
  std::int64_t steps = 0;
  StepReport last;
};

inline std::filesystem::path resolve_data_dir(const ExperimentManifest& m) {
  return m.data_dir.empty() ? default_data_dir() : std::filesystem::path(m.data_dir);
}

inline Checkpoint load_dense_checkpoint(const ExperimentManifest& m) {
  if (m.dense_checkpoint.empty()) {
    throw ConfigError("recipe '" + std::string(1, m.strategy.recipe_id) +
                      "' needs 'dense_checkpoint' (train a baseline first)");
  }
  if (!std::filesystem::exists(m.dense_checkpoint)) {
    throw ConfigError("dense checkpoint not found: " + m.dense_checkpoint);
  }
  return load_checkpoint(m.dense_checkpoint);
}

/// Runs total_steps steps, writing into out_dir:
///   resolved_manifest.json  the manifest with every default expanded
///   metrics.jsonl           one MetricsRecord per step
///   checkpoint.ckpt         latest checkpoint (cadence and completion)
inline CompressionResult run_compression(const ExperimentManifest& manifest,
                                         const RunOptions& options = {}) {
  const std::filesystem::path out(manifest.out_dir);
  std::filesystem::create_directories(out);
  CompressionResult result;
  result.resolved_manifest = out / "resolved_manifest.json";
  result.metrics_log = out / "metrics.jsonl";
  result.checkpoint = out / "checkpoint.ckpt";
  write_json_file(result.resolved_manifest, to_json(manifest));

  std::optional<Checkpoint> dense;
  if (requires_dense_checkpoint(manifest.strategy)) dense = load_dense_checkpoint(manifest);
  const TaskSpec& task = find_task(manifest.task);
  const Dataset train = load_dataset(task, Split::Train, 0, resolve_data_dir(manifest));
  CompressionSession session(manifest, train, dense ? &*dense : nullptr);

  bool append = false;
  if (options.resume && std::filesystem::exists(result.checkpoint)) {
    const Checkpoint ck = load_checkpoint(result.checkpoint);
    if (ck.manifest == to_json(manifest) && ck.step <= manifest.total_steps) {
      session.restore(ck);
      truncate_metrics_log(result.metrics_log, ck.step);
      append = true;
      if (options.log) options.log("resuming at step " + std::to_string(ck.step));
    }
  }
  if (session.step_index() == manifest.total_steps) {
    if (options.log) options.log("run already complete");
    result.steps = session.step_index();
    return result;
  }
  MetricsWriter writer(result.metrics_log, append);
  if (session.step_index() > 0) writer.set_last_step(session.step_index() - 1);

  const auto start = std::chrono::steady_clock::now();
  while (session.step_index() < manifest.total_steps) {
    StepReport report = session.step();
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    writer.write({report.step, report.scalars, elapsed});
    if (options.on_step) options.on_step(session, report);
    if (manifest.checkpoint_every > 0 && session.step_index() % manifest.checkpoint_every == 0 &&
        session.step_index() < manifest.total_steps) {
      save_checkpoint(session.to_checkpoint(), result.checkpoint);
    }
    if (options.log && (session.step_index() % 50 == 0 ||
                        session.step_index() == manifest.total_steps)) {
      std::string line = "step " + std::to_string(session.step_index()) + "/" +
                         std::to_string(manifest.total_steps);
      for (const char* k : {"generator_objective", "discriminator_objective", "L_Overall",
                            "sparsity"}) {
        auto it = report.scalars.find(k);
        if (it != report.scalars.end()) line += " " + std::string(k) + "=" + std::to_string(it->second);
      }
      options.log(line);
    }
    result.last = std::move(report);
  }
  Checkpoint final_ck = session.to_checkpoint();
  for (const auto& [k, v] : result.last.scalars) final_ck.metrics["final." + k] = v;
  save_checkpoint(final_ck, result.checkpoint);
  result.steps = session.step_index();
  return result;
}

}  // namespace prunegan
