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

// Magnitude pruning at four granularities.
//
// A weight tensor with axes (F, C, H, W) is partitioned into groups:
//   Element0D  one scalar                  F*C*H*W groups
//   Vector1D   one row of length W         F*C*H   groups
//   Kernel2D   one H x W slice             F*C     groups
//   Filter3D   one C x H x W slice         F       groups
// Groups are contiguous in row-major order, so group g covers the flat range
// [g * group_size, (g + 1) * group_size).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prunegan/errors.hpp"
#include "prunegan/tensor.hpp"

namespace prunegan {

enum class Granularity { Element0D, Vector1D, Kernel2D, Filter3D };

inline std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::Element0D: return "element";
    case Granularity::Vector1D: return "vector";
    case Granularity::Kernel2D: return "kernel";
    case Granularity::Filter3D: return "filter";
  }
  return "element";
}

inline Granularity parse_granularity(std::string_view name) {
  if (name == "element") return Granularity::Element0D;
  if (name == "vector") return Granularity::Vector1D;
  if (name == "kernel") return Granularity::Kernel2D;
  if (name == "filter") return Granularity::Filter3D;
  throw ValidationError("unknown granularity '" + std::string(name) +
                        "' (expected element, vector, kernel or filter)");
}

inline std::size_t group_size(const Shape4& s, Granularity g) {
  switch (g) {
    case Granularity::Element0D: return 1;
    case Granularity::Vector1D: return static_cast<std::size_t>(s.w);
    case Granularity::Kernel2D: return static_cast<std::size_t>(s.h) * s.w;
    case Granularity::Filter3D: return static_cast<std::size_t>(s.c) * s.h * s.w;
  }
  return 1;
}

inline std::size_t group_count(const Shape4& s, Granularity g) {
  return s.numel() / group_size(s, g);
}

/// Number of groups zeroed for a target sparsity: floor(target * groups).
/// The small slack absorbs binary rounding of decimal targets such as
/// 0.29 * 100 = 28.999999999999996.
inline std::size_t pruned_group_count(double target_sparsity, std::size_t groups) {
  const double raw = target_sparsity * static_cast<double>(groups);
  auto k = static_cast<std::size_t>(std::floor(raw + 1e-9));
  return std::min(k, groups);
}

/// Binary keep/prune map for one layer. bits[i] == 1 keeps element i.
struct PruningMask {
  Shape4 shape;
  Granularity granularity = Granularity::Element0D;
  std::vector<std::uint8_t> bits;
  double sparsity = 0.0;

  static PruningMask ones(const Shape4& shape, Granularity g = Granularity::Element0D) {
    return PruningMask{shape, g, std::vector<std::uint8_t>(shape.numel(), 1), 0.0};
  }

  std::size_t zero_count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{0}));
  }

  bool operator==(const PruningMask&) const = default;
};

/// Zero-bit count over total bits. Both counts are integers, so the only
/// rounding is the final division.
inline double sparsity_of(const PruningMask& mask) {
  if (mask.bits.empty()) return 0.0;
  return static_cast<double>(mask.zero_count()) / static_cast<double>(mask.bits.size());
}

/// L1 norm of each group, enumerated in row-major order over (F, C, H, W).
inline std::vector<double> compute_group_scores(const WeightTensor& weights,
                                                Granularity granularity) {
  const Shape4& shape = weights.values.shape();
  if (!shape.valid()) {
    throw ValidationError("layer '" + weights.layer_id + "' has invalid shape " + shape.str());
  }
  const auto values = weights.values.values();
  const std::size_t gsize = group_size(shape, granularity);
  std::vector<double> scores(values.size() / gsize, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = values[i];
    if (!std::isfinite(v)) {
      throw ValidationError("layer '" + weights.layer_id +
                            "' contains a non-finite weight at flat index " + std::to_string(i));
    }
    scores[i / gsize] += std::abs(static_cast<double>(v));
  }
  return scores;
}

/// Zeroes the floor(target * groups) lowest-scoring groups. Ties go to the
/// lower group index, so the zeroed set grows monotonically with the target.
inline PruningMask build_mask(std::span<const double> scores, Granularity granularity,
                              double target_sparsity, const Shape4& shape) {
  if (!(target_sparsity >= 0.0 && target_sparsity <= 1.0)) {
    throw ValidationError("target sparsity " + std::to_string(target_sparsity) +
                          " outside [0, 1]");
  }
  if (!shape.valid()) throw ValidationError("invalid mask shape " + shape.str());
  const std::size_t groups = group_count(shape, granularity);
  if (scores.size() != groups) {
    throw ValidationError("expected " + std::to_string(groups) + " " +
                          std::string(to_string(granularity)) + " scores for shape " +
                          shape.str() + ", got " + std::to_string(scores.size()));
  }

  std::vector<std::size_t> order(groups);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  PruningMask mask = PruningMask::ones(shape, granularity);
  const std::size_t gsize = group_size(shape, granularity);
  const std::size_t k = pruned_group_count(target_sparsity, groups);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t g = order[r];
    std::fill_n(mask.bits.begin() + static_cast<std::ptrdiff_t>(g * gsize), gsize,
                std::uint8_t{0});
  }
  mask.sparsity = sparsity_of(mask);
  return mask;
}

/// Convenience: score and mask in one call.
inline PruningMask magnitude_mask(const WeightTensor& weights, Granularity granularity,
                                  double target_sparsity) {
  const auto scores = compute_group_scores(weights, granularity);
  return build_mask(scores, granularity, target_sparsity, weights.values.shape());
}

/// Writes exact +0.0 at pruned positions (a multiply would leave -0.0).
inline void apply_mask_inplace(Tensor& values, const PruningMask& mask) {
  if (values.shape() != mask.shape || values.size() != mask.bits.size()) {
    throw ValidationError("mask shape " + mask.shape.str() + " does not match weights " +
                          values.shape().str());
  }
  float* w = values.data();
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i] == 0) w[i] = 0.0f;
  }
}

inline WeightTensor apply_mask(const WeightTensor& weights, const PruningMask& mask) {
  WeightTensor out = weights;
  try {
    apply_mask_inplace(out.values, mask);
  } catch (const ValidationError& e) {
    throw ValidationError("layer '" + weights.layer_id + "': " + e.what());
  }
  return out;
}

/// True when every group of the mask is uniformly kept or uniformly pruned.
inline bool is_group_constant(const PruningMask& mask) {
  const std::size_t gsize = group_size(mask.shape, mask.granularity);
  for (std::size_t start = 0; start < mask.bits.size(); start += gsize) {
    const auto first = mask.bits[start];
    for (std::size_t i = 1; i < gsize; ++i) {
      if (mask.bits[start + i] != first) return false;
    }
  }
  return true;
}

}  // namespace prunegan
