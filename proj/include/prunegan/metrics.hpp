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

// Image-quality metrics: Frechet distance over feature statistics, PSNR,
// SSIM, and sparsity accounting.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prunegan/checkpoint.hpp"
#include "prunegan/errors.hpp"
#include "prunegan/tensor.hpp"

namespace prunegan {

struct FrechetStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::int64_t count = 0;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Single-pass mean and scatter (Welford / Chan update). Rows are added in
/// the order given, so the result is deterministic for a fixed stream.
class FrechetAccumulator {
 public:
  explicit FrechetAccumulator(int dim)
      : mean_(Eigen::VectorXd::Zero(dim)), scatter_(Eigen::MatrixXd::Zero(dim, dim)) {}

  void add(const double* row) {
    const Eigen::Map<const Eigen::VectorXd> x(row, mean_.size());
    ++count_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    scatter_.noalias() += delta * (x - mean_).transpose();
  }

  /// Adds each row of an (n x dim) row-major block.
  void add_rows(const std::vector<double>& rows) {
    const auto d = static_cast<std::size_t>(mean_.size());
    if (rows.size() % d != 0) throw ValidationError("feature block is not a multiple of dim");
    for (std::size_t i = 0; i < rows.size(); i += d) add(rows.data() + i);
  }

  std::int64_t count() const { return count_; }

  FrechetStats finish() const {
    if (count_ < 2) {
      throw ValidationError("feature statistics need at least 2 samples, got " +
                            std::to_string(count_));
    }
    FrechetStats s;
    s.mean = mean_;
    s.covariance = scatter_ / static_cast<double>(count_ - 1);
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
    s.count = count_;
    return s;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
  std::int64_t count_ = 0;
};

/// Statistics of an (n x dim) row-major feature block.
inline FrechetStats feature_stats(const std::vector<double>& rows, int dim) {
  FrechetAccumulator acc(dim);
  acc.add_rows(rows);
  return acc.finish();
}

namespace detail {

inline Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    throw NumericError(std::string("eigendecomposition of ") + what + " did not converge");
  }
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}).
///
/// tr((S_a S_b)^{1/2}) equals tr((A S_b A)^{1/2}) with A = S_a^{1/2}, and the
/// latter is symmetric PSD, so both roots go through a symmetric
/// eigendecomposition with negative eigenvalues clamped to zero.
inline double frechet_distance(const FrechetStats& a, const FrechetStats& b) {
  if (a.dim() != b.dim() || a.covariance.rows() != a.dim() || b.covariance.rows() != b.dim()) {
    throw ValidationError("Frechet statistics have mismatched dimensions " +
                          std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
  const Eigen::MatrixXd root_a = detail::symmetric_sqrt(a.covariance, "covariance");
  Eigen::MatrixXd inner = root_a * b.covariance * root_a;
  inner = 0.5 * (inner + inner.transpose()).eval();
  const Eigen::MatrixXd cross = detail::symmetric_sqrt(inner, "covariance product");
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double value =
      mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
  if (!std::isfinite(value)) throw NumericError("Frechet distance is not finite");
  if (value < 0.0 && value >= -1e-6) return 0.0;
  return value;
}

inline double mean_squared_error(std::span<const double> image,
                                 std::span<const double> reference) {
  if (image.size() != reference.size() || image.empty()) {
    throw ValidationError("image size " + std::to_string(image.size()) +
                          " does not match reference size " + std::to_string(reference.size()));
  }
  // Running mean: a constant squared error is reproduced exactly.
  double mean = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = image[i] - reference[i];
    mean += (d * d - mean) / static_cast<double>(i + 1);
  }
  return mean;
}

/// Peak signal-to-noise ratio in dB; +infinity when the images are equal.
inline double psnr(std::span<const double> image, std::span<const double> reference,
                   double max_value) {
  if (!(max_value > 0.0)) throw ValidationError("psnr max_value must be > 0");
  const double mse = mean_squared_error(image, reference);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(max_value) - 10.0 * std::log10(mse);
}

inline double psnr(const Tensor& image, const Tensor& reference, double max_value) {
  if (image.shape() != reference.shape()) {
    throw ValidationError("image shape " + image.shape().str() + " does not match reference " +
                          reference.shape().str());
  }
  const std::vector<double> a(image.storage().begin(), image.storage().end());
  const std::vector<double> b(reference.storage().begin(), reference.storage().end());
  return psnr(a, b, max_value);
}

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  /// Dynamic range L of the pixel values.
  double data_range = 1.0;
};

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(size);
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

/// Valid-mode separable filtering of one (h x w) plane.
inline std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                        const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1;
  const int ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * plane[y * w + x + i];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Mean SSIM over all valid window positions of every (sample, channel)
/// plane, using Gaussian-weighted local statistics.
inline double ssim(const Tensor& image, const Tensor& reference, const SsimOptions& opt = {}) {
  if (image.shape() != reference.shape()) {
    throw ValidationError("image shape " + image.shape().str() + " does not match reference " +
                          reference.shape().str());
  }
  const Shape4& s = image.shape();
  if (s.h < opt.window || s.w < opt.window) {
    throw ValidationError("image " + s.str() + " smaller than the SSIM window");
  }
  const double c1 = std::pow(0.01 * opt.data_range, 2);
  const double c2 = std::pow(0.03 * opt.data_range, 2);
  const auto g = detail::gaussian_window(opt.window, opt.sigma);
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  double total = 0.0;
  std::size_t count = 0;
  std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        x[i] = image[base + i];
        y[i] = reference[base + i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
      }
      const auto mx = detail::filter_valid(x, s.h, s.w, g);
      const auto my = detail::filter_valid(y, s.h, s.w, g);
      const auto mxx = detail::filter_valid(xx, s.h, s.w, g);
      const auto myy = detail::filter_valid(yy, s.h, s.w, g);
      const auto mxy = detail::filter_valid(xy, s.h, s.w, g);
      for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cxy = mxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
      }
      count += mx.size();
    }
  }
  return total / static_cast<double>(count);
}

struct LayerSparsity {
  std::string name;
  std::size_t parameters = 0;
  std::size_t zeros = 0;
  double sparsity = 0.0;
};

struct SparsityReport {
  std::vector<LayerSparsity> layers;
  std::size_t total_parameters = 0;
  std::size_t total_zeros = 0;
  /// Pruned fraction over all masked layers, weighted by layer size.
  double aggregate = 0.0;
};

/// Counts come from the masks; layers without a mask do not contribute.
inline SparsityReport sparsity_report(const Checkpoint& ckpt) {
  SparsityReport r;
  for (const auto& [name, mask] : ckpt.masks) {
    LayerSparsity l{name, mask.bits.size(), mask.zero_count(), sparsity_of(mask)};
    r.total_parameters += l.parameters;
    r.total_zeros += l.zeros;
    r.layers.push_back(l);
  }
  if (r.total_parameters > 0) {
    r.aggregate = static_cast<double>(r.total_zeros) / static_cast<double>(r.total_parameters);
  }
  return r;
}

}  // namespace prunegan
