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

#include <filesystem>
#include <random>

#include "property_suites.hpp"
#include "prunegan/checkpoint.hpp"

namespace prunegan {
namespace {

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "prunegan_ckpt_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Checkpoint random_checkpoint() {
  std::mt19937_64 rng(77);
  Checkpoint ck;
  ck.manifest = {{"task", "ring2d"}, {"seed", 3}};
  ck.step = 123;
  ck.metrics = {{"fid", 12.345678901234567}, {"loss", -0.1}};
  ck.parameters["G.0.weight"] = suites::random_weights({5, 3, 3, 3}, rng);
  ck.parameters["G.0.bias"] = suites::random_weights({5, 1, 1, 1}, rng);
  WeightTensor w{ck.parameters["G.0.weight"], "G.0.weight"};
  const auto mask = magnitude_mask(w, Granularity::Kernel2D, 0.5);
  apply_mask_inplace(ck.parameters["G.0.weight"], mask);
  ck.masks["G.0.weight"] = mask;
  return ck;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto ck = random_checkpoint();
  const auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(ck, path);
  const auto back = load_checkpoint(path);
  EXPECT_EQ(back, ck);
  EXPECT_EQ(parameter_checksum(back.parameters), parameter_checksum(ck.parameters));
  EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(ck));
}

TEST(Checkpoint, MaskedPositionsLoadAsZero) {
  const auto path = temp_path("masked.ckpt");
  save_checkpoint(random_checkpoint(), path);
  const auto back = load_checkpoint(path);
  const auto& m = back.masks.at("G.0.weight");
  const auto& w = back.parameters.at("G.0.weight");
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    if (m.bits[i] == 0) {
      EXPECT_EQ(w[i], 0.0f);
    }
  }
  EXPECT_EQ(m.granularity, Granularity::Kernel2D);
}

TEST(Checkpoint, ShapeConflictIsRejected) {
  auto ck = random_checkpoint();
  ck.masks["G.0.weight"] = PruningMask::ones({5, 3, 3, 2});
  EXPECT_THROW(save_checkpoint(ck, temp_path("bad.ckpt")), ValidationError);

  // serialize does not validate, so this yields an archive that must fail on load.
  const std::string bytes = serialize_checkpoint(ck);
  EXPECT_THROW(deserialize_checkpoint(bytes, "mem"), ValidationError);
}

TEST(Checkpoint, CorruptionAndVersionAreDetected) {
  std::string bytes = serialize_checkpoint(random_checkpoint());
  std::string corrupt = bytes;
  corrupt[corrupt.size() - 3] ^= 0x40;
  EXPECT_THROW(deserialize_checkpoint(corrupt, "mem"), IoError);
  std::string version = bytes;
  version[8] = 9;
  EXPECT_THROW(deserialize_checkpoint(version, "mem"), IoError);
  EXPECT_THROW(deserialize_checkpoint("not a checkpoint", "mem"), IoError);
  EXPECT_THROW(load_checkpoint(temp_path("missing.ckpt")), IoError);
}

TEST(Checkpoint, NonZeroAtMaskedPositionIsRejected) {
  auto ck = random_checkpoint();
  const auto& m = ck.masks.at("G.0.weight");
  const auto it = std::find(m.bits.begin(), m.bits.end(), 0);
  ck.parameters["G.0.weight"][static_cast<std::size_t>(it - m.bits.begin())] = 1.0f;
  EXPECT_THROW(validate_checkpoint(ck), ValidationError);
}

}  // namespace
}  // namespace prunegan
