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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prunegan/errors.hpp"

namespace prunegan {

/// NCHW extents. Weight tensors reuse the same layout as (F, C, H, W);
/// fully-connected layers are (F, C, 1, 1).
struct Shape4 {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }
  bool operator==(const Shape4&) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

/// Dense float tensor with value semantics.
class Tensor {
 public:
  Tensor() : shape_{0, 0, 0, 0} {}
  explicit Tensor(Shape4 shape, float fill = 0.0f)
      : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(Shape4 shape, std::vector<float> values)
      : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.numel()) {
      throw ValidationError("tensor data size " + std::to_string(data_.size()) +
                            " does not match shape " + shape_.str());
    }
  }

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  std::vector<float>& storage() { return data_; }
  const std::vector<float>& storage() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const {
    return data_[offset(n, c, h, w)];
  }

  /// Slice of one sample along the batch axis.
  std::span<float> sample(int n) {
    const std::size_t stride = static_cast<std::size_t>(shape_.c) * shape_.h * shape_.w;
    return {data_.data() + n * stride, stride};
  }
  std::span<const float> sample(int n) const {
    const std::size_t stride = static_cast<std::size_t>(shape_.c) * shape_.h * shape_.w;
    return {data_.data() + n * stride, stride};
  }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (float v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t offset(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  Shape4 shape_;
  std::vector<float> data_;
};

/// A prunable layer's weights together with the name used in diagnostics.
struct WeightTensor {
  Tensor values;
  std::string layer_id;
};

}  // namespace prunegan
