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
#include <cstdint>
#include <span>
#include <vector>

#include "prunegan/errors.hpp"
#include "prunegan/tensor.hpp"

namespace prunegan::nn {

/// Scalar loss together with its gradient w.r.t. the network output.
struct LossValue {
  double value = 0.0;
  Tensor grad;
};

/// Mean binary cross-entropy on logits against a constant target in {0, 1}.
inline LossValue bce_with_logits(const Tensor& logits, float target) {
  LossValue out{0.0, Tensor(logits.shape())};
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    out.value += std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::abs(x)));
    const double sig = 1.0 / (1.0 + std::exp(-x));
    out.grad[i] = static_cast<float>((sig - target) * inv_n);
  }
  out.value *= inv_n;
  return out;
}

/// Mean squared difference over all elements.
inline LossValue mse(const Tensor& prediction, const Tensor& target) {
  if (prediction.shape() != target.shape()) {
    throw ValidationError("mse shape mismatch: " + prediction.shape().str() + " vs " +
                          target.shape().str());
  }
  LossValue out{0.0, Tensor(prediction.shape())};
  const double inv_n = 1.0 / static_cast<double>(prediction.size());
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = static_cast<double>(prediction[i]) - target[i];
    out.value += d * d;
    out.grad[i] = static_cast<float>(2.0 * d * inv_n);
  }
  out.value *= inv_n;
  return out;
}

/// Mean softmax cross-entropy. Logits are (N, K, 1, 1).
inline LossValue softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const auto& s = logits.shape();
  const int k = s.c * s.h * s.w;
  if (static_cast<std::size_t>(s.n) != labels.size()) {
    throw ValidationError("label count does not match batch size");
  }
  LossValue out{0.0, Tensor(s)};
  for (int n = 0; n < s.n; ++n) {
    const float* z = logits.data() + static_cast<std::size_t>(n) * k;
    float* g = out.grad.data() + static_cast<std::size_t>(n) * k;
    double mx = z[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(z[j]));
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(z[j] - mx);
    const int y = labels[n];
    if (y < 0 || y >= k) throw ValidationError("label out of range");
    out.value += -(z[y] - mx - std::log(denom));
    for (int j = 0; j < k; ++j) {
      const double p = std::exp(z[j] - mx) / denom;
      g[j] = static_cast<float>((p - (j == y ? 1.0 : 0.0)) / s.n);
    }
  }
  out.value /= s.n;
  return out;
}

}  // namespace prunegan::nn
