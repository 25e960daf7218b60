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

#include <algorithm>
#include <random>

#include "property_suites.hpp"
#include "prunegan/pruning.hpp"

namespace prunegan {
namespace {

WeightTensor small_weights() {
  return {Tensor({2, 2, 1, 1}, std::vector<float>{0.1f, -0.4f, 0.05f, 0.3f}), "conv"};
}

TEST(GroupScores, ElementScoresAreAbsoluteValues) {
  const auto s = compute_group_scores(small_weights(), Granularity::Element0D);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_NEAR(s[0], 0.1, 1e-7);
  EXPECT_NEAR(s[1], 0.4, 1e-7);
  EXPECT_NEAR(s[2], 0.05, 1e-7);
  EXPECT_NEAR(s[3], 0.3, 1e-7);
}

TEST(GroupScores, FilterScoresArePerFilterSums) {
  const auto s = compute_group_scores(small_weights(), Granularity::Filter3D);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0], 0.5, 1e-7);
  EXPECT_NEAR(s[1], 0.35, 1e-7);
}

TEST(GroupScores, KernelScoresMatchPerSliceSum) {
  std::mt19937_64 rng(3);
  const WeightTensor w{suites::random_weights({4, 3, 3, 3}, rng), "k"};
  const auto s = compute_group_scores(w, Granularity::Kernel2D);
  ASSERT_EQ(s.size(), 12u);
  for (int f = 0; f < 4; ++f)
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int h = 0; h < 3; ++h)
        for (int x = 0; x < 3; ++x) acc += std::abs(static_cast<double>(w.values.at(f, c, h, x)));
      EXPECT_DOUBLE_EQ(s[f * 3 + c], acc);
    }
}

TEST(GroupScores, VectorGroupsAreRows) {
  const WeightTensor w{Tensor({1, 1, 2, 3}, std::vector<float>{1, -1, 1, 2, 0, 0}), "v"};
  const auto s = compute_group_scores(w, Granularity::Vector1D);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0], 3.0);
  EXPECT_DOUBLE_EQ(s[1], 2.0);
}

TEST(GroupScores, NonFiniteWeightNamesLayer) {
  WeightTensor w = small_weights();
  w.values[2] = std::numeric_limits<float>::quiet_NaN();
  try {
    compute_group_scores(w, Granularity::Element0D);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("conv"), std::string::npos);
  }
}

TEST(BuildMask, ZeroesTwoSmallestElements) {
  const std::vector<double> scores{0.1, 0.4, 0.05, 0.3};
  const auto m = build_mask(scores, Granularity::Element0D, 0.5, {2, 2, 1, 1});
  EXPECT_EQ(m.bits, (std::vector<std::uint8_t>{0, 1, 0, 1}));
  EXPECT_DOUBLE_EQ(m.sparsity, 0.5);
}

TEST(BuildMask, ZeroSparsityIsAllOnes) {
  const std::vector<double> scores{3, 1, 2};
  const auto m = build_mask(scores, Granularity::Element0D, 0.0, {3, 1, 1, 1});
  EXPECT_EQ(m.zero_count(), 0u);
}

TEST(BuildMask, FilterMaskMatchesSortOracle) {
  std::mt19937_64 rng(8);
  const WeightTensor w{suites::random_weights({8, 4, 3, 3}, rng), "f"};
  const auto m = magnitude_mask(w, Granularity::Filter3D, 0.75);
  std::vector<std::pair<double, int>> norms;
  for (int f = 0; f < 8; ++f) {
    double acc = 0.0;
    for (float v : w.values.sample(f)) acc += std::abs(static_cast<double>(v));
    norms.push_back({acc, f});
  }
  std::sort(norms.begin(), norms.end());
  std::vector<bool> pruned(8, false);
  for (int i = 0; i < 6; ++i) pruned[norms[i].second] = true;
  int zero_filters = 0;
  for (int f = 0; f < 8; ++f) {
    const std::size_t begin = static_cast<std::size_t>(f) * 36;
    const bool all_zero = std::all_of(m.bits.begin() + begin, m.bits.begin() + begin + 36,
                                      [](auto b) { return b == 0; });
    zero_filters += all_zero;
    EXPECT_EQ(all_zero, pruned[f]) << "filter " << f;
  }
  EXPECT_EQ(zero_filters, 6);
}

TEST(BuildMask, DecimalTargetsUseFloorWithSlack) {
  EXPECT_EQ(pruned_group_count(0.29, 100), 29u);
  EXPECT_EQ(pruned_group_count(0.5, 7), 3u);
  EXPECT_EQ(pruned_group_count(1.0, 5), 5u);
}

TEST(BuildMask, RejectsOutOfRangeAndWrongScoreCount) {
  const std::vector<double> scores{1, 2};
  EXPECT_THROW(build_mask(scores, Granularity::Element0D, 1.5, {2, 1, 1, 1}), ValidationError);
  EXPECT_THROW(build_mask(scores, Granularity::Element0D, 0.5, {3, 1, 1, 1}), ValidationError);
}

TEST(ApplyMask, ZeroesMaskedPositions) {
  Tensor w({2, 1, 1, 1}, std::vector<float>{1.0f, 2.0f});
  PruningMask m = PruningMask::ones({2, 1, 1, 1});
  m.bits[1] = 0;
  apply_mask_inplace(w, m);
  EXPECT_EQ(w[0], 1.0f);
  EXPECT_EQ(w[1], 0.0f);
  EXPECT_FALSE(std::signbit(w[1]));
}

TEST(ApplyMask, NegativeWeightsBecomePositiveZero) {
  Tensor w({1, 1, 1, 1}, std::vector<float>{-3.0f});
  PruningMask m = PruningMask::ones({1, 1, 1, 1});
  m.bits[0] = 0;
  apply_mask_inplace(w, m);
  EXPECT_FALSE(std::signbit(w[0]));
}

TEST(ApplyMask, AllOnesLeavesWeightsUnchangedAndTwiceEqualsOnce) {
  std::mt19937_64 rng(1);
  const WeightTensor w{suites::random_weights({3, 2, 3, 3}, rng), "x"};
  EXPECT_EQ(apply_mask(w, PruningMask::ones(w.values.shape())).values, w.values);
  const auto m = magnitude_mask(w, Granularity::Kernel2D, 0.5);
  const auto once = apply_mask(w, m);
  EXPECT_EQ(apply_mask(once, m).values, once.values);
}

TEST(ApplyMask, ShapeMismatchNamesLayer) {
  const WeightTensor w{Tensor({2, 1, 1, 1}), "g.3"};
  try {
    apply_mask(w, PruningMask::ones({3, 1, 1, 1}));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("g.3"), std::string::npos);
  }
}

TEST(SparsityOf, CountsZeroBits) {
  PruningMask m = PruningMask::ones({4, 1, 1, 1});
  m.bits = {0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(sparsity_of(m), 0.5);
  EXPECT_DOUBLE_EQ(sparsity_of(PruningMask::ones({4, 1, 1, 1})), 0.0);

  std::mt19937_64 rng(4);
  PruningMask r = PruningMask::ones({1000, 1, 1, 1});
  int zeros = 0;
  for (auto& b : r.bits) {
    b = rng() % 3 == 0 ? 0 : 1;
    zeros += b == 0;
  }
  EXPECT_DOUBLE_EQ(sparsity_of(r), zeros / 1000.0);
}

TEST(MaskProperties, AllGranularitiesAndLevels) {
  const auto r = suites::mask_suite();
  EXPECT_TRUE(r.ok()) << r.summary();
}

TEST(Granularity, ParseRoundTrip) {
  for (auto g : {Granularity::Element0D, Granularity::Vector1D, Granularity::Kernel2D,
                 Granularity::Filter3D}) {
    EXPECT_EQ(parse_granularity(to_string(g)), g);
  }
  EXPECT_THROW(parse_granularity("channel"), ValidationError);
}

}  // namespace
}  // namespace prunegan
