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

// Feature extractors for Frechet distance.
//
// "mnist-cls-v1" is a small digit classifier trained once with a fixed seed;
// its 64-channel penultimate activation is the feature vector. It has no
// batch normalization, so features of an image never depend on the rest of
// its batch. "identity" flattens samples and is meant for low-dimensional
// tasks such as ring2d.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "prunegan/checkpoint.hpp"
#include "prunegan/data.hpp"
#include "prunegan/errors.hpp"
#include "prunegan/metrics.hpp"
#include "prunegan/nn/losses.hpp"
#include "prunegan/nn/network.hpp"
#include "prunegan/nn/optim.hpp"

namespace prunegan {

inline std::filesystem::path default_cache_dir() {
  if (const char* env = std::getenv("PRUNEGAN_CACHE_DIR")) return env;
  return ".cache";
}

inline std::vector<nn::LayerSpec> mnist_classifier_layers() {
  using nn::ActivationKind;
  using nn::LayerKind;
  using nn::NormKind;
  return {
      {LayerKind::Conv, 1, 32, 4, 2, 1, NormKind::None, ActivationKind::LeakyReLU, true},
      {LayerKind::Conv, 32, 64, 4, 2, 1, NormKind::None, ActivationKind::LeakyReLU, true},
      {LayerKind::Conv, 64, 64, 7, 1, 0, NormKind::None, ActivationKind::LeakyReLU, true},
      {LayerKind::Conv, 64, 10, 1, 1, 0, NormKind::None, ActivationKind::None, true},
  };
}

class FeatureExtractor {
 public:
  static constexpr std::size_t kFeatureBlock = 2;

  static FeatureExtractor identity(int dim) {
    FeatureExtractor e;
    e.id_ = "identity";
    e.dim_ = dim;
    return e;
  }

  static FeatureExtractor classifier(nn::Network net, std::uint32_t checksum) {
    FeatureExtractor e;
    e.id_ = "mnist-cls-v1";
    e.dim_ = 64;
    e.net_ = std::move(net);
    e.checksum_ = checksum;
    return e;
  }

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }
  /// Parameter checksum; equal checksums mean identical features.
  std::uint32_t checksum() const { return checksum_; }

  /// Appends one row of features per sample of `images` to `rows`.
  void extract(const Tensor& images, std::vector<double>& rows) {
    const Shape4& s = images.shape();
    if (id_ == "identity") {
      if (static_cast<int>(s.c * s.h * s.w) != dim_) {
        throw ValidationError("identity extractor expects " + std::to_string(dim_) +
                              " values per sample, got " + std::to_string(s.c * s.h * s.w));
      }
      rows.insert(rows.end(), images.storage().begin(), images.storage().end());
      return;
    }
    if (s.c != 1) throw ValidationError("mnist-cls-v1 expects single-channel images");
    Tensor input = images;
    if (s.h != 28 || s.w != 28) {
      input = Tensor({s.n, 1, 28, 28});
      for (int n = 0; n < s.n; ++n) {
        resize_bilinear(images.sample(n).data(), s.h, s.w, input.sample(n).data(), 28, 28);
      }
    }
    net_.forward(input);
    const Tensor& f = net_.activation(kFeatureBlock);
    rows.insert(rows.end(), f.storage().begin(), f.storage().end());
  }

  /// Statistics over a stream of image batches.
  FrechetStats stats(const std::function<bool(Tensor&)>& next_batch) {
    FrechetAccumulator acc(dim_);
    Tensor batch;
    std::vector<double> rows;
    while (next_batch(batch)) {
      rows.clear();
      extract(batch, rows);
      acc.add_rows(rows);
    }
    return acc.finish();
  }

  /// Statistics over a fixed image set, processed in chunks.
  FrechetStats stats(const Tensor& images, int chunk = 256) {
    const Shape4 s = images.shape();
    int pos = 0;
    return stats([&](Tensor& out) {
      if (pos >= s.n) return false;
      const int n = std::min(chunk, s.n - pos);
      const std::size_t item = static_cast<std::size_t>(s.c) * s.h * s.w;
      const float* begin = images.data() + static_cast<std::size_t>(pos) * item;
      out = Tensor({n, s.c, s.h, s.w}, std::vector<float>(begin, begin + n * item));
      pos += n;
      return true;
    });
  }

  nn::Network& network() { return net_; }

 private:
  std::string id_;
  int dim_ = 0;
  nn::Network net_;
  std::uint32_t checksum_ = 0;
};

struct ExtractorTrainingOptions {
  std::uint64_t seed = 0;
  int epochs = 5;
  int batch_size = 64;
  double learning_rate = 1e-3;
};

struct ExtractorTrainingResult {
  nn::Network network;
  double test_accuracy = 0.0;
};

inline double classifier_accuracy(nn::Network& net, const Dataset& data) {
  int correct = 0;
  for (int start = 0; start < data.size(); start += 256) {
    const int n = std::min(256, data.size() - start);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = start + i;
    const Tensor logits = net.forward(BatchStream::gather(data, idx));
    for (int i = 0; i < n; ++i) {
      int best = 0;
      for (int k = 1; k < 10; ++k) {
        if (logits.at(i, k, 0, 0) > logits.at(i, best, 0, 0)) best = k;
      }
      correct += best == data.labels[start + i];
    }
  }
  return static_cast<double>(correct) / data.size();
}

inline ExtractorTrainingResult train_mnist_extractor(const std::filesystem::path& data_dir,
                                                     const ExtractorTrainingOptions& opt = {}) {
  const Dataset train = load_mnist(data_dir, Split::Train, 28, 28);
  const Dataset test = load_mnist(data_dir, Split::Test, 28, 28);
  nn::Network net("E", mnist_classifier_layers());
  net.initialize(stream_seed(opt.seed, 0x657874, 0));
  nn::Adam adam({opt.learning_rate, 0.9, 0.999, 1e-8});
  BatchStream stream(train, opt.batch_size, opt.seed);
  const std::int64_t steps = stream.steps_per_epoch() * opt.epochs;
  for (std::int64_t step = 0; step < steps; ++step) {
    const auto idx = stream.indices(step);
    std::vector<int> labels(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = train.labels[idx[i]];
    const Tensor logits = net.forward(BatchStream::gather(train, idx));
    const auto loss = nn::softmax_cross_entropy(logits, labels);
    if (!std::isfinite(loss.value)) throw NumericError("extractor training loss is not finite");
    net.zero_grad();
    net.backward(loss.grad, true);
    adam.step(net.parameters());
  }
  const double accuracy = classifier_accuracy(net, test);
  return {std::move(net), accuracy};
}

inline std::filesystem::path extractor_cache_path(const std::string& id,
                                                  const std::filesystem::path& cache_dir) {
  return cache_dir / "extractors" / (id + ".ckpt");
}

inline void save_extractor(const nn::Network& net, double accuracy,
                           const std::filesystem::path& path) {
  Checkpoint ck;
  ck.manifest = {{"extractor", "mnist-cls-v1"}, {"feature_dim", 64}};
  ck.metrics["test_accuracy"] = accuracy;
  export_network(net, ck.parameters);
  save_checkpoint(ck, path);
}

/// Resolves an extractor id. The classifier is loaded from the cache and
/// trained (then cached) when absent.
inline FeatureExtractor load_extractor(const std::string& id, const Shape4& image,
                                       const std::filesystem::path& data_dir,
                                       const std::filesystem::path& cache_dir,
                                       const std::function<void(const std::string&)>& log = {}) {
  if (id == "identity") return FeatureExtractor::identity(image.c * image.h * image.w);
  if (id != "mnist-cls-v1") {
    throw ConfigError("unknown extractor '" + id + "' (expected mnist-cls-v1 or identity)");
  }
  const auto path = extractor_cache_path(id, cache_dir);
  nn::Network net("E", mnist_classifier_layers());
  if (std::filesystem::exists(path)) {
    import_network(net, load_checkpoint(path).parameters);
  } else {
    if (log) log("training extractor " + id + " (cache miss at " + path.string() + ")");
    auto trained = train_mnist_extractor(data_dir);
    if (log) log("extractor test accuracy " + std::to_string(trained.test_accuracy));
    save_extractor(trained.network, trained.test_accuracy, path);
    net = std::move(trained.network);
  }
  std::map<std::string, Tensor> params;
  export_network(net, params);
  return FeatureExtractor::classifier(std::move(net), parameter_checksum(params));
}

}  // namespace prunegan
