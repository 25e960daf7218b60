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
#include <map>
#include <string>
#include <vector>

#include "prunegan/nn/network.hpp"

namespace prunegan::nn {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamOptions&) const = default;
};

/// Adam with bias correction. Moment buffers are keyed by parameter name so
/// they survive checkpoint round-trips.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamOptions options) : options_(options) {}

  const AdamOptions& options() const { return options_; }
  std::int64_t steps() const { return steps_; }

  void step(const std::vector<Parameter*>& params) {
    ++steps_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
    const float lr = static_cast<float>(options_.learning_rate / bc1);
    const float b1 = static_cast<float>(options_.beta1);
    const float b2 = static_cast<float>(options_.beta2);
    const float sqrt_bc2 = static_cast<float>(std::sqrt(bc2));
    const float eps = static_cast<float>(options_.epsilon);
    for (Parameter* p : params) {
      auto& [m, v] = state_[p->name];
      if (m.size() != p->value.size()) {
        m.assign(p->value.size(), 0.0f);
        v.assign(p->value.size(), 0.0f);
      }
      float* w = p->value.data();
      const float* g = p->grad.data();
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = b1 * m[i] + (1.0f - b1) * g[i];
        v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
        w[i] -= lr * m[i] / (std::sqrt(v[i]) / sqrt_bc2 + eps);
      }
    }
  }

  /// Serialized moments: name -> (m, v).
  const std::map<std::string, std::pair<std::vector<float>, std::vector<float>>>& state() const {
    return state_;
  }

  void restore(std::int64_t steps,
               std::map<std::string, std::pair<std::vector<float>, std::vector<float>>> state) {
    steps_ = steps;
    state_ = std::move(state);
  }

 private:
  AdamOptions options_;
  std::int64_t steps_ = 0;
  std::map<std::string, std::pair<std::vector<float>, std::vector<float>>> state_;
};

}  // namespace prunegan::nn
