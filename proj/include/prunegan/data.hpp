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

// Dataset ingestion and deterministic batch streams.
//
// MNIST is read from IDX files (optionally gzip-compressed) under
// <data_dir>/mnist. Pixels map to [-1, 1]; images are resized bilinearly
// when the task resolution differs from 28x28. Batch order is a pure
// function of (seed, step): every epoch draws a fresh permutation from a
// generator seeded by (seed, epoch).

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "prunegan/errors.hpp"
#include "prunegan/models.hpp"
#include "prunegan/tensor.hpp"

namespace prunegan {

/// splitmix64 finalizer; derives independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
}

/// Standard normal latent batch (N, dim, 1, 1) for a given stream position.
inline Tensor sample_latent(int batch, int dim, std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t index) {
  std::mt19937_64 rng(stream_seed(seed, stream, index));
  std::normal_distribution<float> d(0.0f, 1.0f);
  Tensor z({batch, dim, 1, 1});
  for (auto& v : z.storage()) v = d(rng);
  return z;
}

enum class Split { Train, Test };

inline std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

struct Dataset {
  std::string name;
  Split split = Split::Train;
  Tensor images;           // (N, C, H, W) in [-1, 1]
  std::vector<int> labels;  // empty when unlabeled; mode index for ring2d

  int size() const { return images.shape().n; }
  Shape4 item_shape() const {
    auto s = images.shape();
    s.n = 1;
    return s;
  }
};

inline std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PRUNEGAN_DATA_DIR")) return env;
  return "data";
}

namespace detail {

class GzFile {
 public:
  explicit GzFile(const std::filesystem::path& path) : path_(path) {
    file_ = gzopen(path.c_str(), "rb");
    if (file_ == nullptr) throw DataError("cannot open " + path.string());
  }
  ~GzFile() {
    if (file_ != nullptr) gzclose(file_);
  }
  GzFile(const GzFile&) = delete;
  GzFile& operator=(const GzFile&) = delete;

  void read(void* dst, std::size_t n) {
    auto* out = static_cast<unsigned char*>(dst);
    while (n > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
      const int got = gzread(file_, out, chunk);
      if (got <= 0) throw DataError("truncated or corrupt file " + path_.string());
      out += got;
      n -= static_cast<std::size_t>(got);
    }
  }

  std::uint32_t read_be32() {
    std::array<unsigned char, 4> b{};
    read(b.data(), 4);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
  }

 private:
  std::filesystem::path path_;
  gzFile file_ = nullptr;
};

inline std::filesystem::path find_idx(const std::filesystem::path& dir, const std::string& stem) {
  for (const auto& candidate : {dir / stem, dir / (stem + ".gz")}) {
    if (std::filesystem::exists(candidate)) return candidate;
  }
  throw DataError("missing dataset file " + (dir / stem).string() +
                  " (run tools/fetch_mnist.sh or set PRUNEGAN_DATA_DIR)");
}

}  // namespace detail

struct IdxImages {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;
};

inline IdxImages read_idx_images(const std::filesystem::path& path) {
  detail::GzFile f(path);
  if (f.read_be32() != 0x00000803) throw DataError("bad IDX image magic in " + path.string());
  IdxImages out;
  out.count = static_cast<int>(f.read_be32());
  out.rows = static_cast<int>(f.read_be32());
  out.cols = static_cast<int>(f.read_be32());
  if (out.count <= 0 || out.rows <= 0 || out.cols <= 0) {
    throw DataError("bad IDX image header in " + path.string());
  }
  out.pixels.resize(static_cast<std::size_t>(out.count) * out.rows * out.cols);
  f.read(out.pixels.data(), out.pixels.size());
  return out;
}

inline std::vector<int> read_idx_labels(const std::filesystem::path& path) {
  detail::GzFile f(path);
  if (f.read_be32() != 0x00000801) throw DataError("bad IDX label magic in " + path.string());
  const auto count = f.read_be32();
  std::vector<std::uint8_t> raw(count);
  f.read(raw.data(), raw.size());
  return {raw.begin(), raw.end()};
}

/// Bilinear resize of one single-channel plane (align_corners = false).
inline void resize_bilinear(const float* src, int sh, int sw, float* dst, int dh, int dw) {
  const double sy = static_cast<double>(sh) / dh;
  const double sx = static_cast<double>(sw) / dw;
  for (int y = 0; y < dh; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), sh - 1);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double wy = fy - y0;
    for (int x = 0; x < dw; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), sw - 1);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double wx = fx - x0;
      const double top = src[y0 * sw + x0] * (1 - wx) + src[y0 * sw + x1] * wx;
      const double bot = src[y1 * sw + x0] * (1 - wx) + src[y1 * sw + x1] * wx;
      dst[y * dw + x] = static_cast<float>(top * (1 - wy) + bot * wy);
    }
  }
}

inline Dataset load_mnist(const std::filesystem::path& data_dir, Split split, int height,
                          int width) {
  const auto dir = data_dir / "mnist";
  const std::string prefix = split == Split::Train ? "train" : "t10k";
  const auto img_path = detail::find_idx(dir, prefix + "-images-idx3-ubyte");
  const auto lbl_path = detail::find_idx(dir, prefix + "-labels-idx1-ubyte");
  const IdxImages raw = read_idx_images(img_path);
  Dataset ds;
  ds.name = "mnist";
  ds.split = split;
  ds.labels = read_idx_labels(lbl_path);
  if (static_cast<int>(ds.labels.size()) != raw.count) {
    throw DataError("label count " + std::to_string(ds.labels.size()) + " in " +
                    lbl_path.string() + " does not match image count " +
                    std::to_string(raw.count));
  }
  ds.images = Tensor({raw.count, 1, height, width});
  const std::size_t plane = static_cast<std::size_t>(raw.rows) * raw.cols;
  std::vector<float> tmp(plane);
  for (int i = 0; i < raw.count; ++i) {
    for (std::size_t p = 0; p < plane; ++p) {
      tmp[p] = raw.pixels[i * plane + p] / 255.0f * 2.0f - 1.0f;
    }
    float* dst = ds.images.data() + static_cast<std::size_t>(i) * height * width;
    if (raw.rows == height && raw.cols == width) {
      std::copy(tmp.begin(), tmp.end(), dst);
    } else {
      resize_bilinear(tmp.data(), raw.rows, raw.cols, dst, height, width);
    }
  }
  return ds;
}

/// Eight Gaussian modes evenly spaced on a circle of radius 0.8.
inline Dataset make_ring2d(int count, std::uint64_t seed) {
  constexpr double kRadius = 0.8;
  constexpr double kStd = 0.02;
  constexpr double kPi = 3.14159265358979323846;
  Dataset ds;
  ds.name = "ring2d";
  ds.images = Tensor({count, 2, 1, 1});
  ds.labels.resize(count);
  std::mt19937_64 rng(stream_seed(seed, 0x72696e67, 0));
  std::uniform_int_distribution<int> mode(0, 7);
  std::normal_distribution<double> noise(0.0, kStd);
  for (int i = 0; i < count; ++i) {
    const int m = mode(rng);
    ds.labels[i] = m;
    const double angle = 2.0 * kPi * m / 8.0;
    ds.images[2 * i] = static_cast<float>(kRadius * std::cos(angle) + noise(rng));
    ds.images[2 * i + 1] = static_cast<float>(kRadius * std::sin(angle) + noise(rng));
  }
  return ds;
}

inline Dataset load_dataset(const TaskSpec& task, Split split, std::uint64_t seed,
                            const std::filesystem::path& data_dir = default_data_dir()) {
  if (task.dataset == "mnist") return load_mnist(data_dir, split, task.image.h, task.image.w);
  if (task.dataset == "ring2d") {
    auto ds = make_ring2d(split == Split::Train ? 8192 : 2048,
                          seed + (split == Split::Train ? 0 : 1));
    ds.split = split;
    return ds;
  }
  throw DataError("task '" + task.id + "' references unknown dataset '" + task.dataset + "'");
}

/// Deterministic shuffled minibatches; the last partial batch of an epoch
/// is dropped.
class BatchStream {
 public:
  BatchStream(const Dataset& data, int batch_size, std::uint64_t seed)
      : data_(&data), batch_(batch_size), seed_(seed) {
    if (batch_size < 1 || batch_size > data.size()) {
      throw ValidationError("batch size " + std::to_string(batch_size) +
                            " invalid for dataset of " + std::to_string(data.size()));
    }
  }

  std::int64_t steps_per_epoch() const { return data_->size() / batch_; }

  /// Sample indices of the batch at a global step.
  std::vector<int> indices(std::int64_t step) {
    const std::int64_t epoch = step / steps_per_epoch();
    const std::int64_t pos = step % steps_per_epoch();
    if (epoch != cached_epoch_) {
      perm_.resize(data_->size());
      std::iota(perm_.begin(), perm_.end(), 0);
      std::mt19937_64 rng(stream_seed(seed_, 0x64617461, static_cast<std::uint64_t>(epoch)));
      std::shuffle(perm_.begin(), perm_.end(), rng);
      cached_epoch_ = epoch;
    }
    return {perm_.begin() + pos * batch_, perm_.begin() + (pos + 1) * batch_};
  }

  Tensor batch(std::int64_t step) { return gather(*data_, indices(step)); }

  static Tensor gather(const Dataset& data, const std::vector<int>& idx) {
    Shape4 s = data.images.shape();
    const std::size_t item = static_cast<std::size_t>(s.c) * s.h * s.w;
    s.n = static_cast<int>(idx.size());
    Tensor out(s);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const float* src = data.images.data() + static_cast<std::size_t>(idx[i]) * item;
      std::copy(src, src + item, out.data() + i * item);
    }
    return out;
  }

 private:
  const Dataset* data_;
  int batch_;
  std::uint64_t seed_;
  std::int64_t cached_epoch_ = -1;
  std::vector<int> perm_;
};

}  // namespace prunegan
