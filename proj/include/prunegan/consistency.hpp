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

// Self-supervised consistency objectives.
//
// A teacher (dense, frozen) and a student (pruned) generator each produce a
// vector of named loss terms evaluated through the same pretrained
// discriminator. The consistency losses measure how far the student's terms
// drift from the teacher's:
//
//   L_GC = sum_k w_k * |t_k - s_k| / max(|t_k|, eps)     generative terms
//   L_DC = sum_k w_k * |t_k - s_k| / max(|t_k|, eps)     discriminative terms
//   L_overall = L_GC + lambda * L_DC
//
// Teacher values are constants; the gradient helpers differentiate with
// respect to the student terms only.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "prunegan/errors.hpp"

namespace prunegan {

/// Named scalar loss components for one model on one batch.
struct LossTermVector {
  std::map<std::string, double> terms;

  LossTermVector() = default;
  LossTermVector(std::initializer_list<std::pair<const std::string, double>> init)
      : terms(init) {}

  double at(const std::string& name) const {
    auto it = terms.find(name);
    if (it == terms.end()) throw ValidationError("loss term '" + name + "' not present");
    return it->second;
  }
  bool contains(const std::string& name) const { return terms.count(name) != 0; }
  std::size_t size() const { return terms.size(); }

  /// Name of the first non-finite term, or empty when all are finite.
  std::string first_non_finite() const {
    for (const auto& [k, v] : terms) {
      if (!std::isfinite(v)) return k;
    }
    return {};
  }

  bool operator==(const LossTermVector&) const = default;
};

struct ConsistencyWeights {
  /// Weights of the generative terms. The leading term "gen" has implicit
  /// weight 1 when absent; cla and rec default to the StarGAN alpha and beta.
  std::map<std::string, double> generative{{"gen", 1.0}, {"cla", 1.0}, {"rec", 10.0}};
  /// Weights of the discriminative terms; "dis" is implicitly 1, gp is delta.
  std::map<std::string, double> discriminative{{"dis", 1.0}, {"gp", 10.0}};
  double lambda = 0.5;
  double epsilon = 1e-8;

  void validate() const {
    for (const auto* m : {&generative, &discriminative}) {
      for (const auto& [k, w] : *m) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
          throw ValidationError("consistency weight '" + k + "' must be finite and >= 0");
        }
      }
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw ValidationError("lambda must be finite and >= 0");
    }
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  }

  bool operator==(const ConsistencyWeights&) const = default;
};

inline double normalized_term_distance(double teacher, double student, double epsilon) {
  return std::abs(teacher - student) / std::max(std::abs(teacher), epsilon);
}

/// d/d(student) of normalized_term_distance; 0 at teacher == student.
inline double normalized_term_distance_grad(double teacher, double student, double epsilon) {
  const double diff = student - teacher;
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  return sign / std::max(std::abs(teacher), epsilon);
}

namespace detail {

inline double term_weight(const std::map<std::string, double>& weights,
                          const std::string& name, const char* leading) {
  auto it = weights.find(name);
  if (it != weights.end()) return it->second;
  if (name == leading) return 1.0;
  throw ValidationError("no consistency weight configured for term '" + name + "'");
}

inline void require_same_terms(const LossTermVector& teacher, const LossTermVector& student) {
  std::vector<std::string> missing;
  for (const auto& [k, v] : teacher.terms) {
    if (!student.contains(k)) missing.push_back("student." + k);
  }
  for (const auto& [k, v] : student.terms) {
    if (!teacher.contains(k)) missing.push_back("teacher." + k);
  }
  if (!missing.empty()) {
    std::string msg = "teacher/student loss terms differ; missing:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
}

inline double weighted_distance(const LossTermVector& teacher, const LossTermVector& student,
                                const std::map<std::string, double>& weights,
                                const char* leading, double epsilon) {
  require_same_terms(teacher, student);
  double total = 0.0;
  for (const auto& [name, t] : teacher.terms) {
    total += term_weight(weights, name, leading) *
             normalized_term_distance(t, student.terms.at(name), epsilon);
  }
  return total;
}

inline LossTermVector weighted_distance_grad(const LossTermVector& teacher,
                                             const LossTermVector& student,
                                             const std::map<std::string, double>& weights,
                                             const char* leading, double epsilon) {
  require_same_terms(teacher, student);
  LossTermVector grad;
  for (const auto& [name, t] : teacher.terms) {
    grad.terms[name] = term_weight(weights, name, leading) *
                       normalized_term_distance_grad(t, student.terms.at(name), epsilon);
  }
  return grad;
}

}  // namespace detail

inline double generative_consistency(const LossTermVector& teacher,
                                     const LossTermVector& student,
                                     const ConsistencyWeights& weights) {
  return detail::weighted_distance(teacher, student, weights.generative, "gen",
                                   weights.epsilon);
}

inline double discriminative_consistency(const LossTermVector& teacher,
                                         const LossTermVector& student,
                                         const ConsistencyWeights& weights) {
  return detail::weighted_distance(teacher, student, weights.discriminative, "dis",
                                   weights.epsilon);
}

/// Partial derivatives of generative_consistency w.r.t. each student term.
inline LossTermVector generative_consistency_grad(const LossTermVector& teacher,
                                                  const LossTermVector& student,
                                                  const ConsistencyWeights& weights) {
  return detail::weighted_distance_grad(teacher, student, weights.generative, "gen",
                                        weights.epsilon);
}

inline LossTermVector discriminative_consistency_grad(const LossTermVector& teacher,
                                                      const LossTermVector& student,
                                                      const ConsistencyWeights& weights) {
  return detail::weighted_distance_grad(teacher, student, weights.discriminative, "dis",
                                        weights.epsilon);
}

inline double overall_loss(double l_gc, double l_dc, double lambda) {
  return l_gc + lambda * l_dc;
}

/// Weighted sum of a model's own loss terms, the "standard" objective.
inline double weighted_sum(const LossTermVector& v, const std::map<std::string, double>& weights,
                           const char* leading) {
  double total = 0.0;
  for (const auto& [name, value] : v.terms) {
    total += detail::term_weight(weights, name, leading) * value;
  }
  return total;
}

}  // namespace prunegan
