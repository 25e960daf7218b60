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
#include <zlib.h>

#include <filesystem>
#include <fstream>

#include "prunegan/checkpoint.hpp"
#include "prunegan/data.hpp"
#include "prunegan/models.hpp"

namespace prunegan {
namespace {

std::map<std::string, Tensor> snapshot(nn::Network& net) {
  std::map<std::string, Tensor> out;
  for (auto* p : net.parameters()) out[p->name] = p->value;
  return out;
}

TEST(Models, RegistryShapesHold) {
  for (const auto& [id, spec] : task_registry()) {
    EXPECT_NO_THROW(validate_task(spec)) << id;
    auto m = build_models(spec, 1);
    const Tensor z = sample_latent(3, spec.latent_dim, 1, 0, 0);
    const Tensor y = m.generator.forward(z);
    EXPECT_EQ(y.shape(), spec.image_shape(3)) << id;
    EXPECT_EQ(m.discriminator.forward(y).shape(), (Shape4{3, 1, 1, 1})) << id;
  }
}

TEST(Models, DcganOutputIs64x64) {
  auto m = build_models(find_task("dcgan-mnist"), 0);
  EXPECT_EQ(m.generator.forward(sample_latent(2, 100, 0, 0, 0)).shape(), (Shape4{2, 1, 64, 64}));
}

TEST(Models, SameSeedSameChecksum) {
  auto a = build_models(find_task("dcgan-mnist-28"), 5);
  auto b = build_models(find_task("dcgan-mnist-28"), 5);
  auto c = build_models(find_task("dcgan-mnist-28"), 6);
  EXPECT_EQ(parameter_checksum(snapshot(a.generator)), parameter_checksum(snapshot(b.generator)));
  EXPECT_NE(parameter_checksum(snapshot(a.generator)), parameter_checksum(snapshot(c.generator)));
}

TEST(Models, HalfWidthHasHalfParameters) {
  for (const auto& id : {"dcgan-mnist", "dcgan-mnist-28", "ring2d"}) {
    const auto& spec = find_task(id);
    const double scale = solve_width_scale(spec, 0.5);
    const double ratio = static_cast<double>(parameter_count(with_generator_width(spec, scale).generator)) /
                         parameter_count(spec.generator);
    EXPECT_NEAR(ratio, 0.5, 0.025) << id;
  }
}

TEST(Models, BrokenChainNamesLayer) {
  auto spec = find_task("ring2d");
  spec.generator[1].in_channels = 7;
  try {
    validate_task(spec);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("generator layer 1"), std::string::npos);
  }
  EXPECT_THROW(find_task("stargan"), ValidationError);
}

void put_be32(std::string& s, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::filesystem::path make_fixture(bool gzip) {
  const auto root = std::filesystem::temp_directory_path() /
                    (gzip ? "prunegan_idx_gz" : "prunegan_idx_plain");
  std::filesystem::create_directories(root / "mnist");
  std::string images;
  put_be32(images, 0x803);
  put_be32(images, 3);
  put_be32(images, 28);
  put_be32(images, 28);
  for (int i = 0; i < 3 * 28 * 28; ++i) images.push_back(static_cast<char>(i % 256));
  std::string labels;
  put_be32(labels, 0x801);
  put_be32(labels, 3);
  labels += std::string{7, 2, 1};
  auto write = [&](const std::string& stem, const std::string& bytes) {
    if (gzip) {
      gzFile f = gzopen((root / "mnist" / (stem + ".gz")).c_str(), "wb");
      gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
      gzclose(f);
    } else {
      std::ofstream(root / "mnist" / stem, std::ios::binary) << bytes;
    }
  };
  write("train-images-idx3-ubyte", images);
  write("train-labels-idx1-ubyte", labels);
  return root;
}

TEST(Data, ReadsPlainAndGzippedIdx) {
  for (bool gz : {false, true}) {
    const auto ds = load_mnist(make_fixture(gz), Split::Train, 28, 28);
    EXPECT_EQ(ds.size(), 3);
    EXPECT_EQ(ds.item_shape(), (Shape4{1, 1, 28, 28}));
    EXPECT_EQ(ds.labels, (std::vector<int>{7, 2, 1}));
    EXPECT_FLOAT_EQ(ds.images[0], -1.0f);
    EXPECT_FLOAT_EQ(ds.images[255], 1.0f);
  }
}

TEST(Data, ResizesToTaskResolution) {
  const auto ds = load_mnist(make_fixture(false), Split::Train, 64, 64);
  EXPECT_EQ(ds.item_shape(), (Shape4{1, 1, 64, 64}));
  for (float v : ds.images.values()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Data, MissingFilesAreDataErrors) {
  EXPECT_THROW(load_mnist("/nonexistent", Split::Test, 28, 28), DataError);
}

TEST(Data, BatchStreamIsPureFunctionOfSeedAndStep) {
  const auto ds = make_ring2d(500, 3);
  BatchStream a(ds, 64, 9);
  BatchStream b(ds, 64, 9);
  // Visit b out of order to make sure no state leaks between steps.
  const Tensor late = b.batch(17);
  EXPECT_EQ(a.batch(0), b.batch(0));
  EXPECT_EQ(a.batch(17), late);
  EXPECT_NE(a.batch(0), a.batch(1));
  BatchStream c(ds, 64, 10);
  EXPECT_NE(c.batch(0), a.batch(0));
}

TEST(Data, RingModesReproducible) {
  const auto a = make_ring2d(400, 12);
  const auto b = make_ring2d(400, 12);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.images, b.images);
  for (int i = 0; i < a.size(); ++i) {
    const double angle = 2.0 * 3.14159265358979323846 * a.labels[i] / 8.0;
    const double dx = a.images[2 * i] - 0.8 * std::cos(angle);
    const double dy = a.images[2 * i + 1] - 0.8 * std::sin(angle);
    EXPECT_LT(std::hypot(dx, dy), 0.15);
  }
}

TEST(Data, LatentsAreDeterministic) {
  EXPECT_EQ(sample_latent(4, 8, 1, 2, 3), sample_latent(4, 8, 1, 2, 3));
  EXPECT_NE(sample_latent(4, 8, 1, 2, 3), sample_latent(4, 8, 1, 2, 4));
}

}  // namespace
}  // namespace prunegan
