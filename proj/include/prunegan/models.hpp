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

// Toy GAN zoo. Each task declares its generator and discriminator as layer
// chains; build_models validates the chain and initializes deterministically.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "prunegan/errors.hpp"
#include "prunegan/nn/network.hpp"

namespace prunegan {

enum class InputKind { LatentVector, SourceImage };

struct TaskSpec {
  std::string id;
  InputKind input_kind = InputKind::LatentVector;
  /// (channels, height, width) of generated / real samples; n is unused.
  Shape4 image;
  int latent_dim = 0;
  std::string dataset;
  std::vector<nn::LayerSpec> generator;
  std::vector<nn::LayerSpec> discriminator;
  /// Generator block whose output the intermediate-distillation stand-in matches.
  std::size_t intermediate_block = 0;

  Shape4 generator_input(int batch) const {
    if (input_kind == InputKind::LatentVector) return {batch, latent_dim, 1, 1};
    return {batch, image.c, image.h, image.w};
  }
  Shape4 image_shape(int batch) const { return {batch, image.c, image.h, image.w}; }
};

namespace detail {

using nn::ActivationKind;
using nn::LayerKind;
using nn::LayerSpec;
using nn::NormKind;

inline TaskSpec dcgan_mnist_64() {
  TaskSpec t;
  t.id = "dcgan-mnist";
  t.image = {1, 1, 64, 64};
  t.latent_dim = 100;
  t.dataset = "mnist";
  const int g = 32;
  const int d = 32;
  t.generator = {
      {LayerKind::ConvTranspose, 100, g * 8, 4, 1, 0, NormKind::BatchNorm, ActivationKind::ReLU},
      {LayerKind::ConvTranspose, g * 8, g * 4, 4, 2, 1, NormKind::BatchNorm, ActivationKind::ReLU},
      {LayerKind::ConvTranspose, g * 4, g * 2, 4, 2, 1, NormKind::BatchNorm, ActivationKind::ReLU},
      {LayerKind::ConvTranspose, g * 2, g, 4, 2, 1, NormKind::BatchNorm, ActivationKind::ReLU},
      {LayerKind::ConvTranspose, g, 1, 4, 2, 1, NormKind::None, ActivationKind::Tanh},
  };
  t.discriminator = {
      {LayerKind::Conv, 1, d, 4, 2, 1, NormKind::None, ActivationKind::LeakyReLU},
      {LayerKind::Conv, d, d * 2, 4, 2, 1, NormKind::BatchNorm, ActivationKind::LeakyReLU},
      {LayerKind::Conv, d * 2, d * 4, 4, 2, 1, NormKind::BatchNorm, ActivationKind::LeakyReLU},
      {LayerKind::Conv, d * 4, d * 8, 4, 2, 1, NormKind::BatchNorm, ActivationKind::LeakyReLU},
      {LayerKind::Conv, d * 8, 1, 4, 1, 0, NormKind::None, ActivationKind::None},
  };
  t.intermediate_block = 2;
  return t;
}

inline TaskSpec dcgan_mnist_28() {
  TaskSpec t;
  t.id = "dcgan-mnist-28";
  t.image = {1, 1, 28, 28};
  t.latent_dim = 100;
  t.dataset = "mnist";
  t.generator = {
      {LayerKind::ConvTranspose, 100, 64, 7, 1, 0, NormKind::BatchNorm, ActivationKind::ReLU},
      {LayerKind::ConvTranspose, 64, 32, 4, 2, 1, NormKind::BatchNorm, ActivationKind::ReLU},
      {LayerKind::ConvTranspose, 32, 1, 4, 2, 1, NormKind::None, ActivationKind::Tanh},
  };
  t.discriminator = {
      {LayerKind::Conv, 1, 32, 4, 2, 1, NormKind::None, ActivationKind::LeakyReLU},
      {LayerKind::Conv, 32, 64, 4, 2, 1, NormKind::BatchNorm, ActivationKind::LeakyReLU},
      {LayerKind::Conv, 64, 1, 7, 1, 0, NormKind::None, ActivationKind::None},
  };
  t.intermediate_block = 1;
  return t;
}

inline TaskSpec ring2d() {
  TaskSpec t;
  t.id = "ring2d";
  t.image = {1, 2, 1, 1};
  t.latent_dim = 8;
  t.dataset = "ring2d";
  t.generator = {
      {LayerKind::Conv, 8, 64, 1, 1, 0, NormKind::None, ActivationKind::ReLU, true},
      {LayerKind::Conv, 64, 64, 1, 1, 0, NormKind::None, ActivationKind::ReLU, true},
      {LayerKind::Conv, 64, 2, 1, 1, 0, NormKind::None, ActivationKind::Tanh, true},
  };
  t.discriminator = {
      {LayerKind::Conv, 2, 64, 1, 1, 0, NormKind::None, ActivationKind::LeakyReLU, true},
      {LayerKind::Conv, 64, 64, 1, 1, 0, NormKind::None, ActivationKind::LeakyReLU, true},
      {LayerKind::Conv, 64, 1, 1, 1, 0, NormKind::None, ActivationKind::None, true},
  };
  t.intermediate_block = 1;
  return t;
}

}  // namespace detail

inline const std::map<std::string, TaskSpec>& task_registry() {
  static const std::map<std::string, TaskSpec> tasks = [] {
    std::map<std::string, TaskSpec> m;
    for (auto t : {detail::dcgan_mnist_64(), detail::dcgan_mnist_28(), detail::ring2d()}) {
      m.emplace(t.id, t);
    }
    return m;
  }();
  return tasks;
}

inline const TaskSpec& find_task(const std::string& id) {
  const auto& reg = task_registry();
  auto it = reg.find(id);
  if (it == reg.end()) {
    std::string known;
    for (const auto& [k, v] : reg) known += (known.empty() ? "" : ", ") + k;
    throw ValidationError("unknown task '" + id + "' (known: " + known + ")");
  }
  return it->second;
}

inline std::size_t parameter_count(const std::vector<nn::LayerSpec>& layers) {
  std::size_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel * l.kernel;
    if (l.bias) n += l.out_channels;
    if (l.norm == nn::NormKind::BatchNorm) n += 2 * static_cast<std::size_t>(l.out_channels);
  }
  return n;
}

/// Scales every hidden channel count of the generator by `scale` (at least
/// one channel). Input and output channels are fixed by the task.
inline TaskSpec with_generator_width(const TaskSpec& spec, double scale) {
  TaskSpec out = spec;
  for (std::size_t i = 0; i + 1 < out.generator.size(); ++i) {
    const int c = std::max(1, static_cast<int>(std::lround(spec.generator[i].out_channels * scale)));
    out.generator[i].out_channels = c;
    out.generator[i + 1].in_channels = c;
  }
  return out;
}

/// Width scale whose generator parameter count is closest to
/// `ratio` times the dense count.
inline double solve_width_scale(const TaskSpec& spec, double ratio) {
  const double dense = static_cast<double>(parameter_count(spec.generator));
  double best = 1.0;
  double best_err = std::abs(1.0 - ratio);
  for (int i = 1; i <= 1000; ++i) {
    const double s = i / 1000.0;
    const double r = parameter_count(with_generator_width(spec, s).generator) / dense;
    const double err = std::abs(r - ratio);
    if (err < best_err) {
      best_err = err;
      best = s;
    }
  }
  return best;
}

/// Checks channel and spatial agreement of both chains. Throws naming the
/// first offending layer.
inline void validate_task(const TaskSpec& spec) {
  auto check_chain = [](const std::vector<nn::LayerSpec>& layers, Shape4 shape,
                        const std::string& which) {
    if (layers.empty()) throw ValidationError(which + " has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.in_channels != shape.c) {
        throw ValidationError(which + " layer " + std::to_string(i) + " expects " +
                              std::to_string(l.in_channels) + " input channels, chain provides " +
                              std::to_string(shape.c));
      }
      shape = {shape.n, l.out_channels, l.output_extent(shape.h), l.output_extent(shape.w)};
      if (shape.h < 1 || shape.w < 1) {
        throw ValidationError(which + " layer " + std::to_string(i) +
                              " produces an empty spatial extent");
      }
    }
    return shape;
  };
  const Shape4 g_out = check_chain(spec.generator, spec.generator_input(1), "generator");
  if (g_out != spec.image_shape(1)) {
    throw ValidationError("generator output " + g_out.str() + " does not match image shape " +
                          spec.image_shape(1).str());
  }
  const Shape4 d_out = check_chain(spec.discriminator, spec.image_shape(1), "discriminator");
  if (d_out != Shape4{1, 1, 1, 1}) {
    throw ValidationError("discriminator must end in a single logit, produces " + d_out.str());
  }
  if (spec.intermediate_block >= spec.generator.size()) {
    throw ValidationError("intermediate block index out of range");
  }
}

struct GanModels {
  nn::Network generator;
  nn::Network discriminator;
};

inline GanModels build_models(const TaskSpec& spec, std::uint64_t seed) {
  validate_task(spec);
  GanModels m{nn::Network("G", spec.generator), nn::Network("D", spec.discriminator)};
  m.generator.initialize(seed * 2 + 1);
  m.discriminator.initialize(seed * 2 + 2);
  return m;
}

}  // namespace prunegan
