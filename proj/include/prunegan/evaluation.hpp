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

// Post-training evaluation of a compressed generator against its dense
// source: Frechet distance of both to the real training set under one
// extractor, and PSNR / SSIM of the student's samples against the dense
// generator's samples on identical latents.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "json.hpp"
#include "prunegan/checkpoint.hpp"
#include "prunegan/config.hpp"
#include "prunegan/data.hpp"
#include "prunegan/engine.hpp"
#include "prunegan/extractor.hpp"
#include "prunegan/metrics.hpp"

namespace prunegan {

inline constexpr int kEvalBatch = 64;

/// Rebuilds the generator stored in a checkpoint, using the checkpoint's own
/// manifest to recover the architecture.
inline nn::Network generator_from_checkpoint(const Checkpoint& ck) {
  const ExperimentManifest m = manifest_from_json(ck.manifest);
  nn::Network g("G", student_task_spec(m).generator);
  import_network(g, ck.parameters);
  return g;
}

/// Batch `index` of the fixed evaluation sample set.
inline Tensor eval_batch(nn::Network& generator, const TaskSpec& task, std::uint64_t seed,
                         int index, int batch) {
  return generator.forward(sample_latent(batch, task.latent_dim, seed, kEvalStream,
                                         static_cast<std::uint64_t>(index)));
}

/// Feature statistics of `count` generated samples.
inline FrechetStats generated_stats(nn::Network& generator, const TaskSpec& task,
                                    std::uint64_t seed, int count, FeatureExtractor& extractor) {
  int index = 0;
  int produced = 0;
  return extractor.stats([&](Tensor& out) {
    if (produced >= count) return false;
    out = eval_batch(generator, task, seed, index++, kEvalBatch);
    if (!out.all_finite()) throw NumericError("generator produced non-finite samples");
    const int keep = std::min(kEvalBatch, count - produced);
    if (keep < kEvalBatch) {
      Shape4 s = out.shape();
      s.n = keep;
      out = Tensor(s, std::vector<float>(out.data(), out.data() + s.numel()));
    }
    produced += keep;
    return true;
  });
}

struct EvaluationResult {
  std::string extractor;
  std::uint32_t extractor_checksum = 0;
  int samples = 0;
  double fid = 0.0;
  std::optional<double> fid_dense;
  std::optional<double> relative_change;
  std::optional<double> psnr;
  std::optional<double> ssim;
  double sparsity = 0.0;
  std::int64_t step = 0;
};

inline nlohmann::json to_json(const EvaluationResult& r) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return *v;
  };
  return {{"extractor", r.extractor},
          {"extractor_checksum", r.extractor_checksum},
          {"samples", r.samples},
          {"fid", r.fid},
          {"fid_dense", opt(r.fid_dense)},
          {"relative_change", opt(r.relative_change)},
          {"psnr", opt(r.psnr)},
          {"ssim", opt(r.ssim)},
          {"sparsity", r.sparsity},
          {"step", r.step}};
}

/// Reference statistics of the real training images, cached per extractor
/// instance by the caller.
inline FrechetStats real_stats(const Dataset& train, FeatureExtractor& extractor) {
  return extractor.stats(train.images);
}

/// Maps generator range [-1, 1] to [0, 1].
inline Tensor to_unit_range(const Tensor& t) {
  Tensor out = t;
  for (auto& v : out.storage()) v = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
  return out;
}

struct EvaluationOptions {
  int samples = 10000;
  std::uint64_t seed = 0;
};

/// Scores `sparse` (and `dense` when given) against precomputed real-image
/// statistics.
inline EvaluationResult evaluate_generators(nn::Network& sparse, nn::Network* dense,
                                            const TaskSpec& task, FeatureExtractor& extractor,
                                            const FrechetStats& real,
                                            const EvaluationOptions& opt) {
  EvaluationResult r;
  r.extractor = extractor.id();
  r.extractor_checksum = extractor.checksum();
  r.samples = opt.samples;
  r.fid = frechet_distance(generated_stats(sparse, task, opt.seed, opt.samples, extractor), real);
  if (!dense) return r;
  r.fid_dense = frechet_distance(generated_stats(*dense, task, opt.seed, opt.samples, extractor),
                                 real);
  r.relative_change = *r.fid_dense == 0.0
                          ? std::numeric_limits<double>::quiet_NaN()
                          : (r.fid - *r.fid_dense) / *r.fid_dense;

  // Pixel agreement on a fixed subset of the same latents.
  const int batches = std::max(1, std::min(opt.samples, 1024) / kEvalBatch);
  double mse_sum = 0.0;
  double ssim_sum = 0.0;
  bool ssim_ok = task.image.h >= SsimOptions{}.window && task.image.w >= SsimOptions{}.window;
  for (int b = 0; b < batches; ++b) {
    const Tensor a = to_unit_range(eval_batch(sparse, task, opt.seed, b, kEvalBatch));
    const Tensor d = to_unit_range(eval_batch(*dense, task, opt.seed, b, kEvalBatch));
    const std::vector<double> av(a.storage().begin(), a.storage().end());
    const std::vector<double> dv(d.storage().begin(), d.storage().end());
    mse_sum += mean_squared_error(av, dv);
    if (ssim_ok) ssim_sum += ssim(a, d);
  }
  const double mse = mse_sum / batches;
  r.psnr = mse == 0.0 ? std::numeric_limits<double>::infinity() : -10.0 * std::log10(mse);
  if (ssim_ok) r.ssim = ssim_sum / batches;
  return r;
}

/// Evaluates a run checkpoint; the dense checkpoint is optional.
inline EvaluationResult evaluate_checkpoint(const Checkpoint& ck, const Checkpoint* dense,
                                            FeatureExtractor& extractor,
                                            const FrechetStats& real, EvaluationOptions opt) {
  const ExperimentManifest m = manifest_from_json(ck.manifest);
  nn::Network student = generator_from_checkpoint(ck);
  std::optional<nn::Network> dense_g;
  if (dense) dense_g = generator_from_checkpoint(*dense);
  Checkpoint g_only;
  for (const auto& [k, mask] : ck.masks) {
    if (k.rfind("G.", 0) == 0) g_only.masks[k] = mask;
  }
  EvaluationResult r =
      evaluate_generators(student, dense_g ? &*dense_g : nullptr, find_task(m.task), extractor,
                          real, opt);
  r.sparsity = sparsity_report(g_only).aggregate;
  r.step = ck.step;
  return r;
}

}  // namespace prunegan
