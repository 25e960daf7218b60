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

// Compression recipes (a) through (n) as declarative configurations.
//
// Each recipe fixes how the student generator and the discriminator are
// initialized, whether the discriminator is frozen or pruned, and which of
// the four loss groups take part:
//   Gc, Dc  generator / discriminator terms of the compressed model
//   Go, Do  generator / discriminator terms of the original model
//
// Reading of Gc/Dc. When a recipe keeps the dense teacher, Gc and Dc denote
// the consistency losses L_GC and L_DC (teacher vs. student terms). Recipes
// without a teacher (d, e, f) mark Gc/Dc while describing plain fine-tuning;
// there the columns are read as the compressed model's own standard losses.
// This is an interpretation of ambiguous table entries and is reported by
// `describe()` for those recipes.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prunegan/consistency.hpp"
#include "prunegan/errors.hpp"
#include "prunegan/schedule.hpp"

namespace prunegan {

enum class GeneratorInit { Random, FromDense };
enum class DiscriminatorInit { None, Random, Pretrained, PretrainedSparse };
enum class ExtraObjective { None, OutputDistill, IntermediateDistill };

struct ActiveLosses {
  bool gc = false;
  bool dc = false;
  bool go = false;
  bool do_ = false;

  bool operator==(const ActiveLosses&) const = default;
};

struct StrategyConfig {
  char recipe_id = 'a';
  std::string title;
  GeneratorInit student_generator_init = GeneratorInit::Random;
  bool student_generator_pruned = false;
  ScheduleKind pruning_kind = ScheduleKind::Gradual;
  bool keep_teacher_generator = false;
  DiscriminatorInit discriminator_init = DiscriminatorInit::Random;
  bool discriminator_fixed = false;
  bool discriminator_pruned = false;
  ActiveLosses active_losses;
  ExtraObjective extra = ExtraObjective::None;
  /// Parameter budget of the student relative to the dense generator; only
  /// recipe (c) uses a narrower dense network.
  double parameter_ratio = 1.0;

  bool uses_discriminator() const { return discriminator_init != DiscriminatorInit::None; }
  /// Gc/Dc mean teacher-vs-student consistency (true) or own losses (false).
  bool consistency_reading() const { return keep_teacher_generator; }
  /// Random-init students train for the full baseline budget.
  bool trains_from_scratch() const {
    return student_generator_init == GeneratorInit::Random;
  }

  /// Whether composed objectives include a discriminator update.
  bool trains_discriminator() const {
    if (!uses_discriminator() || discriminator_fixed) return false;
    return consistency_reading() ? active_losses.do_ : (active_losses.dc || active_losses.do_);
  }
  /// Whether any active loss reads discriminator outputs.
  bool reads_discriminator() const {
    const auto& l = active_losses;
    return uses_discriminator() && (l.gc || l.dc || l.go || l.do_);
  }

  bool operator==(const StrategyConfig&) const = default;
};

inline std::string_view to_string(GeneratorInit v) {
  return v == GeneratorInit::Random ? "random" : "from_dense";
}

inline std::string_view to_string(DiscriminatorInit v) {
  switch (v) {
    case DiscriminatorInit::None: return "none";
    case DiscriminatorInit::Random: return "random";
    case DiscriminatorInit::Pretrained: return "pretrained";
    case DiscriminatorInit::PretrainedSparse: return "pretrained_sparse";
  }
  return "none";
}

inline std::string_view to_string(ExtraObjective v) {
  switch (v) {
    case ExtraObjective::None: return "none";
    case ExtraObjective::OutputDistill: return "output_distill";
    case ExtraObjective::IntermediateDistill: return "intermediate_distill";
  }
  return "none";
}

inline const std::string& recipe_ids() {
  static const std::string ids = "abcdefghijklmn";
  return ids;
}

inline bool is_recipe_id(std::string_view id) {
  return id.size() == 1 && recipe_ids().find(id[0]) != std::string::npos;
}

inline StrategyConfig resolve_strategy(std::string_view recipe_id) {
  if (!is_recipe_id(recipe_id)) {
    throw ValidationError("unknown recipe '" + std::string(recipe_id) +
                          "' (expected one of a..n)");
  }
  using GI = GeneratorInit;
  using DI = DiscriminatorInit;
  using EX = ExtraObjective;
  StrategyConfig c;
  c.recipe_id = recipe_id[0];
  auto set = [&c](std::string title, GI g_init, bool pruned, ScheduleKind kind, bool teacher,
                  DI d_init, bool fixed, bool d_pruned, ActiveLosses losses, EX extra) {
    c.title = std::move(title);
    c.student_generator_init = g_init;
    c.student_generator_pruned = pruned;
    c.pruning_kind = kind;
    c.keep_teacher_generator = teacher;
    c.discriminator_init = d_init;
    c.discriminator_fixed = fixed;
    c.discriminator_pruned = d_pruned;
    c.active_losses = losses;
    c.extra = extra;
  };
  constexpr auto G = ScheduleKind::Gradual;
  constexpr auto O = ScheduleKind::OneShot;
  switch (c.recipe_id) {
    case 'a': set("No Compression", GI::Random, false, G, false, DI::Random, false, false,
                  {false, false, true, true}, EX::None); break;
    case 'b': set("Self-Supervised", GI::FromDense, true, G, true, DI::Pretrained, false, false,
                  {true, true, true, true}, EX::None); break;
    case 'c': set("Small & Dense Network", GI::Random, false, G, false, DI::Random, false, false,
                  {false, false, true, true}, EX::None);
      c.parameter_ratio = 0.5;
      break;
    case 'd': set("One-shot Pruning & Fine-Tuning", GI::FromDense, true, O, false,
                  DI::Pretrained, false, false, {true, true, false, false}, EX::None); break;
    case 'e': set("Gradual Pruning & Fine-Tuning", GI::FromDense, true, G, false, DI::Random,
                  false, false, {true, true, false, false}, EX::None); break;
    case 'f': set("Gradual Pruning during Training", GI::Random, true, G, false, DI::Random,
                  false, false, {true, true, false, false}, EX::None); break;
    case 'g': set("One-shot Pruning & Distillation", GI::FromDense, true, O, true, DI::None,
                  false, false, {true, false, true, false}, EX::OutputDistill); break;
    case 'h': set("(d) & Distillation", GI::FromDense, true, G, true, DI::Pretrained, false,
                  false, {true, true, true, false}, EX::OutputDistill); break;
    case 'i': set("(g) & Fix Original Loss", GI::FromDense, true, O, true, DI::Pretrained, true,
                  false, {true, true, false, false}, EX::None); break;
    case 'j': set("Adversarial Learning", GI::Random, true, G, true, DI::Random, false, false,
                  {true, true, true, true}, EX::None); break;
    case 'k': set("Knowledge Distillation", GI::FromDense, true, G, true, DI::Random, false,
                  false, {true, false, true, true}, EX::OutputDistill); break;
    case 'l': set("Distill Intermediate (LIT)", GI::FromDense, true, G, true, DI::Pretrained,
                  true, false, {false, false, false, false}, EX::IntermediateDistill); break;
    case 'm': set("E-M Pruning", GI::FromDense, true, G, true, DI::PretrainedSparse, false,
                  true, {true, true, true, false}, EX::None); break;
    case 'n': set("G & D Both Pruning", GI::FromDense, true, G, true, DI::PretrainedSparse,
                  false, true, {true, true, true, false}, EX::None); break;
  }
  return c;
}

/// One-line description including the interpretation notes where the
/// recipe's loss columns are ambiguous.
inline std::string describe(const StrategyConfig& c) {
  std::string s = std::string(1, c.recipe_id) + ": " + c.title;
  if (!c.keep_teacher_generator && (c.active_losses.gc || c.active_losses.dc)) {
    s += " [Gc/Dc read as the compressed model's own standard losses]";
  }
  if (c.extra == ExtraObjective::IntermediateDistill) {
    s += " [stand-in: squared distance on one intermediate activation]";
  }
  if (c.recipe_id == 'm') s += " [row configuration only; E-M procedure not reproduced]";
  return s;
}

/// Which term vectors a configuration reads. Keys: G_O, G_C, D_O, D_C, distill.
inline std::vector<std::string> required_term_vectors(const StrategyConfig& c) {
  std::vector<std::string> keys;
  const auto& l = c.active_losses;
  if (c.consistency_reading()) {
    if (l.gc) { keys.push_back("G_O"); keys.push_back("G_C"); }
    if (l.dc) { keys.push_back("D_O"); keys.push_back("D_C"); }
    if (l.go) keys.push_back("G_C");
    if (l.do_ && !c.discriminator_fixed && c.uses_discriminator()) keys.push_back("D_C");
  } else {
    if (l.gc || l.go) keys.push_back("G_C");
    if ((l.dc || l.do_) && !c.discriminator_fixed && c.uses_discriminator()) {
      keys.push_back("D_C");
    }
  }
  if (c.extra != ExtraObjective::None) keys.push_back("distill");
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

using TermValues = std::map<std::string, LossTermVector>;

/// Scalar objectives for one batch, plus their partial derivatives with
/// respect to every student-side loss term (the teacher side is constant).
struct ComposedObjectives {
  double generator = 0.0;
  std::optional<double> discriminator;
  std::optional<double> l_gc;
  std::optional<double> l_dc;
  /// d(generator objective) / d(G_C term), per term name.
  LossTermVector d_generator_d_gc;
  /// d(generator objective) / d(D_C term), per term name.
  LossTermVector d_generator_d_dc;
  /// d(generator objective) / d(distill term).
  double d_generator_d_distill = 0.0;
};

namespace detail {

inline const LossTermVector& require_terms(const TermValues& values, const std::string& key) {
  auto it = values.find(key);
  if (it == values.end()) {
    throw ValidationError("term vector '" + key + "' required by the strategy is missing");
  }
  return it->second;
}

inline void add_scaled(LossTermVector& into, const LossTermVector& from, double scale) {
  for (const auto& [k, v] : from.terms) into.terms[k] += scale * v;
}

inline LossTermVector standard_grad(const LossTermVector& v,
                                    const std::map<std::string, double>& weights,
                                    const char* leading) {
  LossTermVector g;
  for (const auto& [k, value] : v.terms) g.terms[k] = detail::term_weight(weights, k, leading);
  return g;
}

}  // namespace detail

/// Combines the active loss groups:
///   generator     = [Gc] L_GC + [Dc] lambda L_DC + [Go] standard(G_C) + [extra] distill
///   discriminator = [Do, not fixed] standard(D_C)
/// With both consistency groups active the first two terms are exactly
/// overall_loss(L_GC, L_DC, lambda). Under the own-loss reading (no teacher)
/// Gc acts like Go and Dc like Do.
inline ComposedObjectives compose_objectives(const StrategyConfig& config,
                                             const TermValues& values,
                                             const ConsistencyWeights& weights) {
  ComposedObjectives out;
  const auto& l = config.active_losses;
  const bool d_trainable = config.uses_discriminator() && !config.discriminator_fixed;

  if (config.consistency_reading()) {
    double gc = 0.0;
    double dc = 0.0;
    if (l.gc) {
      const auto& t = detail::require_terms(values, "G_O");
      const auto& s = detail::require_terms(values, "G_C");
      gc = generative_consistency(t, s, weights);
      out.l_gc = gc;
      detail::add_scaled(out.d_generator_d_gc, generative_consistency_grad(t, s, weights), 1.0);
    }
    if (l.dc) {
      const auto& t = detail::require_terms(values, "D_O");
      const auto& s = detail::require_terms(values, "D_C");
      dc = discriminative_consistency(t, s, weights);
      out.l_dc = dc;
      detail::add_scaled(out.d_generator_d_dc, discriminative_consistency_grad(t, s, weights),
                         weights.lambda);
    }
    out.generator = overall_loss(gc, dc, weights.lambda);
    if (l.go) {
      const auto& s = detail::require_terms(values, "G_C");
      out.generator += weighted_sum(s, weights.generative, "gen");
      detail::add_scaled(out.d_generator_d_gc,
                         detail::standard_grad(s, weights.generative, "gen"), 1.0);
    }
    if (l.do_ && d_trainable) {
      out.discriminator =
          weighted_sum(detail::require_terms(values, "D_C"), weights.discriminative, "dis");
    }
  } else {
    if (l.gc || l.go) {
      const auto& s = detail::require_terms(values, "G_C");
      out.generator += weighted_sum(s, weights.generative, "gen");
      detail::add_scaled(out.d_generator_d_gc,
                         detail::standard_grad(s, weights.generative, "gen"), 1.0);
    }
    if ((l.dc || l.do_) && d_trainable) {
      out.discriminator =
          weighted_sum(detail::require_terms(values, "D_C"), weights.discriminative, "dis");
    }
  }

  if (config.extra != ExtraObjective::None) {
    out.generator += detail::require_terms(values, "distill").at("distill");
    out.d_generator_d_distill = 1.0;
  }
  return out;
}

}  // namespace prunegan
