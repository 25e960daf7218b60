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

#include <gtest/gtest.h>

#include "prunegan/strategy.hpp"

namespace prunegan {
namespace {

TEST(ResolveStrategy, DenseBaseline) {
  const auto a = resolve_strategy("a");
  EXPECT_EQ(a.student_generator_init, GeneratorInit::Random);
  EXPECT_EQ(a.active_losses, (ActiveLosses{false, false, true, true}));
  EXPECT_FALSE(a.student_generator_pruned);
  EXPECT_TRUE(a.trains_from_scratch());
}

TEST(ResolveStrategy, SelfSupervised) {
  const auto b = resolve_strategy("b");
  EXPECT_EQ(b.active_losses, (ActiveLosses{true, true, true, true}));
  EXPECT_EQ(b.discriminator_init, DiscriminatorInit::Pretrained);
  EXPECT_FALSE(b.discriminator_fixed);
  EXPECT_TRUE(b.keep_teacher_generator);
  EXPECT_EQ(b.pruning_kind, ScheduleKind::Gradual);
}

TEST(ResolveStrategy, FixedOriginalLoss) {
  const auto i = resolve_strategy("i");
  EXPECT_EQ(i.discriminator_init, DiscriminatorInit::Pretrained);
  EXPECT_TRUE(i.discriminator_fixed);
  EXPECT_EQ(i.active_losses, (ActiveLosses{true, true, false, false}));
}

TEST(ResolveStrategy, AllRowsResolveAndUnknownRejected) {
  for (char id : recipe_ids()) {
    const auto c = resolve_strategy(std::string(1, id));
    EXPECT_EQ(c.recipe_id, id);
    EXPECT_FALSE(c.title.empty());
  }
  EXPECT_THROW(resolve_strategy("z"), ValidationError);
  EXPECT_THROW(resolve_strategy("ab"), ValidationError);
  EXPECT_EQ(resolve_strategy("c").parameter_ratio, 0.5);
}

TEST(ComposeObjectives, MatchingTermsLeaveOnlyStandardLoss) {
  const auto b = resolve_strategy("b");
  const LossTermVector g{{"gen", 0.8}};
  const LossTermVector d{{"dis", 1.3}};
  const TermValues v{{"G_O", g}, {"G_C", g}, {"D_O", d}, {"D_C", d}};
  const auto out = compose_objectives(b, v, ConsistencyWeights{});
  EXPECT_EQ(*out.l_gc, 0.0);
  EXPECT_EQ(*out.l_dc, 0.0);
  EXPECT_DOUBLE_EQ(out.generator, 0.8);
  ASSERT_TRUE(out.discriminator.has_value());
  EXPECT_DOUBLE_EQ(*out.discriminator, 1.3);
}

TEST(ComposeObjectives, FineTuneUsesOwnLossesOnly) {
  const auto d = resolve_strategy("d");
  const TermValues v{{"G_C", LossTermVector{{"gen", 0.7}}},
                     {"D_C", LossTermVector{{"dis", 1.1}}}};
  const auto out = compose_objectives(d, v, ConsistencyWeights{});
  EXPECT_FALSE(out.l_gc.has_value());
  EXPECT_FALSE(out.l_dc.has_value());
  EXPECT_DOUBLE_EQ(out.generator, 0.7);
  EXPECT_DOUBLE_EQ(*out.discriminator, 1.1);
  EXPECT_EQ(required_term_vectors(d), (std::vector<std::string>{"D_C", "G_C"}));
}

TEST(ComposeObjectives, FixedDiscriminatorHasNoObjective) {
  const auto i = resolve_strategy("i");
  const TermValues v{{"G_O", LossTermVector{{"gen", 1.0}}}, {"G_C", LossTermVector{{"gen", 1.5}}},
                     {"D_O", LossTermVector{{"dis", 2.0}}}, {"D_C", LossTermVector{{"dis", 1.0}}}};
  const auto out = compose_objectives(i, v, ConsistencyWeights{});
  EXPECT_FALSE(out.discriminator.has_value());
  EXPECT_DOUBLE_EQ(out.generator, overall_loss(0.5, 0.5, 0.5));
}

TEST(ComposeObjectives, GradientCoefficients) {
  const auto b = resolve_strategy("b");
  const TermValues v{{"G_O", LossTermVector{{"gen", 2.0}}}, {"G_C", LossTermVector{{"gen", 3.0}}},
                     {"D_O", LossTermVector{{"dis", 4.0}}}, {"D_C", LossTermVector{{"dis", 1.0}}}};
  const auto out = compose_objectives(b, v, ConsistencyWeights{});
  // d/ds |t - s| / |t| = sign(s - t) / |t|, plus 1 from the standard term.
  EXPECT_DOUBLE_EQ(out.d_generator_d_gc.at("gen"), 0.5 + 1.0);
  EXPECT_DOUBLE_EQ(out.d_generator_d_dc.at("dis"), 0.5 * (-0.25));
}

TEST(ComposeObjectives, DistillationAddsExtraTerm) {
  const auto k = resolve_strategy("k");
  const TermValues v{{"G_O", LossTermVector{{"gen", 1.0}}},
                     {"G_C", LossTermVector{{"gen", 1.0}}},
                     {"D_C", LossTermVector{{"dis", 1.0}}},
                     {"distill", LossTermVector{{"distill", 0.25}}}};
  const auto out = compose_objectives(k, v, ConsistencyWeights{});
  EXPECT_DOUBLE_EQ(out.generator, 1.25);
  EXPECT_EQ(out.d_generator_d_distill, 1.0);
}

TEST(ComposeObjectives, MissingTermVectorIsNamed) {
  try {
    compose_objectives(resolve_strategy("b"), {}, ConsistencyWeights{});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("G_O"), std::string::npos);
  }
}

TEST(Describe, NotesInterpretations) {
  EXPECT_NE(describe(resolve_strategy("d")).find("own standard losses"), std::string::npos);
  EXPECT_NE(describe(resolve_strategy("l")).find("intermediate"), std::string::npos);
}

}  // namespace
}  // namespace prunegan
