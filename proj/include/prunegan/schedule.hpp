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

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>

#include "prunegan/errors.hpp"

namespace prunegan {

enum class ScheduleKind { Gradual, OneShot };

inline std::string_view to_string(ScheduleKind k) {
  return k == ScheduleKind::Gradual ? "gradual" : "one_shot";
}

inline ScheduleKind parse_schedule_kind(std::string_view s) {
  if (s == "gradual") return ScheduleKind::Gradual;
  if (s == "one_shot") return ScheduleKind::OneShot;
  throw ValidationError("unknown schedule kind '" + std::string(s) +
                        "' (expected gradual or one_shot)");
}

/// Step -> target sparsity. Gradual schedules follow the cubic AGP ramp
///   s(t) = s_final + (s_initial - s_final) * (1 - p)^3,
///   p = clamp((t - step_begin) / (step_end - step_begin), 0, 1).
struct SparsitySchedule {
  ScheduleKind kind = ScheduleKind::Gradual;
  double initial = 0.05;
  double final_sparsity = 0.5;
  std::int64_t step_begin = 0;
  std::int64_t step_end = 1;
  /// Steps between mask recomputations.
  std::int64_t update_interval = 1;

  void validate() const {
    if (!(initial >= 0.0 && initial <= final_sparsity && final_sparsity <= 1.0)) {
      throw ValidationError("schedule requires 0 <= initial <= final <= 1, got initial=" +
                            std::to_string(initial) + " final=" + std::to_string(final_sparsity));
    }
    if (kind == ScheduleKind::OneShot && initial != final_sparsity) {
      throw ValidationError("one-shot schedule requires initial == final");
    }
    if (step_begin < 0 || step_end <= step_begin) {
      throw ValidationError("schedule requires 0 <= step_begin < step_end, got " +
                            std::to_string(step_begin) + ".." + std::to_string(step_end));
    }
    if (update_interval < 1) throw ValidationError("update_interval must be >= 1");
  }

  bool operator==(const SparsitySchedule&) const = default;
};

inline double sparsity_at(const SparsitySchedule& s, std::int64_t step) {
  if (s.kind == ScheduleKind::OneShot) {
    return step >= s.step_begin ? s.final_sparsity : 0.0;
  }
  const double span = static_cast<double>(s.step_end - s.step_begin);
  const double p = std::clamp(static_cast<double>(step - s.step_begin) / span, 0.0, 1.0);
  // Endpoints are returned as configured; the cubic would round s_initial.
  if (p <= 0.0) return s.initial;
  if (p >= 1.0) return s.final_sparsity;
  const double rest = 1.0 - p;
  return s.final_sparsity + (s.initial - s.final_sparsity) * rest * rest * rest;
}

inline bool should_update_mask(const SparsitySchedule& s, std::int64_t step) {
  return step >= s.step_begin && step <= s.step_end &&
         (step - s.step_begin) % s.update_interval == 0;
}

/// Default compression ramp: 5% at step 0 rising to the target halfway
/// through the run, recomputing masks every step.
inline SparsitySchedule gradual_schedule(double target, std::int64_t total_steps) {
  SparsitySchedule s;
  s.kind = ScheduleKind::Gradual;
  s.final_sparsity = target;
  s.initial = std::min(0.05, target);
  s.step_begin = 0;
  s.step_end = std::max<std::int64_t>(1, total_steps / 2);
  s.update_interval = 1;
  return s;
}

/// Prune once at step 0 to the target.
inline SparsitySchedule one_shot_schedule(double target) {
  SparsitySchedule s;
  s.kind = ScheduleKind::OneShot;
  s.initial = target;
  s.final_sparsity = target;
  s.step_begin = 0;
  s.step_end = 1;
  s.update_interval = 1;
  return s;
}

}  // namespace prunegan
