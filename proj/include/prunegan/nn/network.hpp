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

// Minimal feed-forward convolutional networks with hand-written backward
// passes: a Network is a chain of Blocks, each block being a convolution or
// transposed convolution, optional batch normalization, and an activation.
// Fully-connected layers are convolutions over 1x1 (or kernel-sized) inputs.
//
// Weight layout is (out_channels, in_channels, k, k) for both convolution
// kinds, so the leading axis of every prunable tensor is the output filter.
// Batch normalization always normalizes with the statistics of the current
// batch and keeps no running buffers.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "prunegan/errors.hpp"
#include "prunegan/tensor.hpp"

namespace prunegan::nn {

enum class LayerKind { Conv, ConvTranspose };
enum class NormKind { None, BatchNorm };
enum class ActivationKind { None, ReLU, LeakyReLU, Tanh, Sigmoid };

inline std::string_view to_string(LayerKind k) {
  return k == LayerKind::Conv ? "conv" : "conv_transpose";
}
inline std::string_view to_string(NormKind k) {
  return k == NormKind::None ? "none" : "batch_norm";
}
inline std::string_view to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::None: return "none";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::LeakyReLU: return "leaky_relu";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
  }
  return "none";
}

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  NormKind norm = NormKind::None;
  ActivationKind activation = ActivationKind::None;
  bool bias = false;

  /// Spatial output extent for an input extent.
  int output_extent(int in) const {
    if (kind == LayerKind::Conv) return (in + 2 * padding - kernel) / stride + 1;
    return (in - 1) * stride - 2 * padding + kernel;
  }

  bool operator==(const LayerSpec&) const = default;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool prunable = false;
};

namespace detail {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

/// Unfolds NCHW input into a (C*k*k) x (N*Ho*Wo) row-major matrix.
inline void im2col(const Tensor& in, int k, int stride, int pad, int out_h, int out_w,
                   std::vector<float>& col) {
  const auto& s = in.shape();
  const std::size_t cols = static_cast<std::size_t>(s.n) * out_h * out_w;
  col.assign(static_cast<std::size_t>(s.c) * k * k * cols, 0.0f);
  for (int c = 0; c < s.c; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        float* row = col.data() + ((static_cast<std::size_t>(c) * k + kh) * k + kw) * cols;
        for (int n = 0; n < s.n; ++n) {
          const float* src = in.data() + (static_cast<std::size_t>(n) * s.c + c) * s.h * s.w;
          float* dst = row + static_cast<std::size_t>(n) * out_h * out_w;
          for (int oh = 0; oh < out_h; ++oh) {
            const int ih = oh * stride - pad + kh;
            if (ih < 0 || ih >= s.h) continue;
            for (int ow = 0; ow < out_w; ++ow) {
              const int iw = ow * stride - pad + kw;
              if (iw < 0 || iw >= s.w) continue;
              dst[oh * out_w + ow] = src[ih * s.w + iw];
            }
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: accumulates a (C*k*k) x (N*Hi*Wi) matrix into an NCHW
/// tensor of the given shape.
inline void col2im(const std::vector<float>& col, int k, int stride, int pad, int in_h, int in_w,
                   Tensor& out) {
  const auto& s = out.shape();
  const std::size_t cols = static_cast<std::size_t>(s.n) * in_h * in_w;
  out.fill(0.0f);
  for (int c = 0; c < s.c; ++c) {
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const float* row =
            col.data() + ((static_cast<std::size_t>(c) * k + kh) * k + kw) * cols;
        for (int n = 0; n < s.n; ++n) {
          float* dst = out.data() + (static_cast<std::size_t>(n) * s.c + c) * s.h * s.w;
          const float* src = row + static_cast<std::size_t>(n) * in_h * in_w;
          for (int ih = 0; ih < in_h; ++ih) {
            const int oh = ih * stride - pad + kh;
            if (oh < 0 || oh >= s.h) continue;
            for (int iw = 0; iw < in_w; ++iw) {
              const int ow = iw * stride - pad + kw;
              if (ow < 0 || ow >= s.w) continue;
              dst[oh * s.w + ow] += src[ih * in_w + iw];
            }
          }
        }
      }
    }
  }
}

/// NCHW -> (C, N*H*W) row-major.
inline void to_channel_major(const Tensor& t, std::vector<float>& m) {
  const auto& s = t.shape();
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  m.resize(t.size());
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = t.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
      std::copy(src, src + hw, m.data() + (static_cast<std::size_t>(c) * s.n + n) * hw);
    }
  }
}

/// (C, N*H*W) row-major -> NCHW.
inline void from_channel_major(const float* m, Tensor& t) {
  const auto& s = t.shape();
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = m + (static_cast<std::size_t>(c) * s.n + n) * hw;
      std::copy(src, src + hw, t.data() + (static_cast<std::size_t>(n) * s.c + c) * hw);
    }
  }
}

}  // namespace detail

/// One conv/deconv + norm + activation stage.
class Block {
 public:
  static constexpr float kLeakySlope = 0.2f;
  static constexpr float kBatchNormEps = 1e-5f;

  Block(std::string name, LayerSpec spec) : name_(std::move(name)), spec_(spec) {
    if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel < 1 || spec.stride < 1 ||
        spec.padding < 0) {
      throw ValidationError("block '" + name_ + "' has an invalid layer spec");
    }
    weight_.name = name_ + ".weight";
    weight_.prunable = true;
    weight_.value = Tensor({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel});
    weight_.grad = Tensor(weight_.value.shape());
    if (spec.bias) {
      bias_ = Parameter{name_ + ".bias", Tensor({1, spec.out_channels, 1, 1}),
                        Tensor({1, spec.out_channels, 1, 1}), false};
    }
    if (spec.norm == NormKind::BatchNorm) {
      gamma_ = Parameter{name_ + ".bn_gamma", Tensor({1, spec.out_channels, 1, 1}, 1.0f),
                         Tensor({1, spec.out_channels, 1, 1}), false};
      beta_ = Parameter{name_ + ".bn_beta", Tensor({1, spec.out_channels, 1, 1}),
                        Tensor({1, spec.out_channels, 1, 1}), false};
    }
  }

  const std::string& name() const { return name_; }
  const LayerSpec& spec() const { return spec_; }

  /// DCGAN initialization: weights ~ N(0, 0.02), gamma ~ N(1, 0.02).
  void initialize(std::mt19937_64& rng) {
    std::normal_distribution<float> w(0.0f, 0.02f);
    for (auto& v : weight_.value.storage()) v = w(rng);
    if (bias_) bias_->value.fill(0.0f);
    if (gamma_) {
      std::normal_distribution<float> g(1.0f, 0.02f);
      for (auto& v : gamma_->value.storage()) v = g(rng);
      beta_->value.fill(0.0f);
    }
  }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&weight_);
    if (bias_) out.push_back(&*bias_);
    if (gamma_) {
      out.push_back(&*gamma_);
      out.push_back(&*beta_);
    }
  }

  Shape4 output_shape(const Shape4& in) const {
    return {in.n, spec_.out_channels, spec_.output_extent(in.h), spec_.output_extent(in.w)};
  }

  const Tensor& forward(const Tensor& in) {
    const auto& s = in.shape();
    if (s.c != spec_.in_channels) {
      throw ValidationError("block '" + name_ + "' expects " + std::to_string(spec_.in_channels) +
                            " input channels, got " + std::to_string(s.c));
    }
    const Shape4 os = output_shape(s);
    if (os.h < 1 || os.w < 1) {
      throw ValidationError("block '" + name_ + "' produces an empty output for input " + s.str());
    }
    input_ = in;
    linear_out_ = Tensor(os);
    if (spec_.kind == LayerKind::Conv) {
      conv_forward();
    } else {
      deconv_forward();
    }
    if (bias_) add_bias(linear_out_);
    if (gamma_) {
      batchnorm_forward();
    } else {
      normed_ = linear_out_;
    }
    output_ = normed_;
    activate(output_);
    return output_;
  }

  const Tensor& output() const { return output_; }

  /// Gradient w.r.t. the block input. Parameter gradients are accumulated only
  /// when requested, so a frozen or adversary network can pass gradients
  /// through without touching its own.
  Tensor backward(const Tensor& grad_out, bool accumulate_params) {
    if (grad_out.shape() != output_.shape()) {
      throw ValidationError("block '" + name_ + "' backward shape mismatch: " +
                            grad_out.shape().str() + " vs " + output_.shape().str());
    }
    Tensor g = grad_out;
    activation_backward(g);
    if (gamma_) {
      g = batchnorm_backward(g, accumulate_params);
    }
    if (bias_ && accumulate_params) {
      const auto& s = g.shape();
      const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
      for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
          const float* p = g.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
          double acc = 0.0;
          for (std::size_t i = 0; i < hw; ++i) acc += p[i];
          bias_->grad[c] += static_cast<float>(acc);
        }
      }
    }
    return spec_.kind == LayerKind::Conv ? conv_backward(g, accumulate_params)
                                         : deconv_backward(g, accumulate_params);
  }

  Parameter& weight() { return weight_; }
  const Parameter& weight() const { return weight_; }

 private:
  void conv_forward() {
    const auto& os = linear_out_.shape();
    const int kk = spec_.kernel * spec_.kernel;
    detail::im2col(input_, spec_.kernel, spec_.stride, spec_.padding, os.h, os.w, col_);
    const Eigen::Index cols = static_cast<Eigen::Index>(os.n) * os.h * os.w;
    detail::ConstMapMat w(weight_.value.data(), spec_.out_channels,
                          static_cast<Eigen::Index>(spec_.in_channels) * kk);
    detail::ConstMapMat c(col_.data(), static_cast<Eigen::Index>(spec_.in_channels) * kk, cols);
    scratch_.resize(static_cast<std::size_t>(spec_.out_channels) * cols);
    detail::MapMat out(scratch_.data(), spec_.out_channels, cols);
    out.noalias() = w * c;
    detail::from_channel_major(scratch_.data(), linear_out_);
  }

  Tensor conv_backward(const Tensor& g, bool accumulate_params) {
    const auto& os = g.shape();
    const int kk = spec_.kernel * spec_.kernel;
    const Eigen::Index cols = static_cast<Eigen::Index>(os.n) * os.h * os.w;
    const Eigen::Index ckk = static_cast<Eigen::Index>(spec_.in_channels) * kk;
    detail::to_channel_major(g, scratch_);
    detail::ConstMapMat gm(scratch_.data(), spec_.out_channels, cols);
    detail::ConstMapMat c(col_.data(), ckk, cols);
    if (accumulate_params) {
      detail::MapMat gw(weight_.grad.data(), spec_.out_channels, ckk);
      gw.noalias() += gm * c.transpose();
    }
    detail::ConstMapMat w(weight_.value.data(), spec_.out_channels, ckk);
    std::vector<float> dcol(static_cast<std::size_t>(ckk) * cols);
    detail::MapMat dc(dcol.data(), ckk, cols);
    dc.noalias() = w.transpose() * gm;
    Tensor grad_in(input_.shape());
    detail::col2im(dcol, spec_.kernel, spec_.stride, spec_.padding, os.h, os.w, grad_in);
    return grad_in;
  }

  /// Weight rearranged as (in, out*k*k) for the transposed product.
  void permuted_weight(std::vector<float>& wp) const {
    const int kk = spec_.kernel * spec_.kernel;
    wp.resize(weight_.value.size());
    for (int co = 0; co < spec_.out_channels; ++co) {
      for (int ci = 0; ci < spec_.in_channels; ++ci) {
        const float* src =
            weight_.value.data() + (static_cast<std::size_t>(co) * spec_.in_channels + ci) * kk;
        float* dst = wp.data() + (static_cast<std::size_t>(ci) * spec_.out_channels + co) * kk;
        std::copy(src, src + kk, dst);
      }
    }
  }

  void deconv_forward() {
    const auto& is = input_.shape();
    const int kk = spec_.kernel * spec_.kernel;
    const Eigen::Index cols = static_cast<Eigen::Index>(is.n) * is.h * is.w;
    const Eigen::Index okk = static_cast<Eigen::Index>(spec_.out_channels) * kk;
    permuted_weight(wperm_);
    detail::to_channel_major(input_, xcm_);
    detail::ConstMapMat w(wperm_.data(), spec_.in_channels, okk);
    detail::ConstMapMat x(xcm_.data(), spec_.in_channels, cols);
    col_.resize(static_cast<std::size_t>(okk) * cols);
    detail::MapMat c(col_.data(), okk, cols);
    c.noalias() = w.transpose() * x;
    detail::col2im(col_, spec_.kernel, spec_.stride, spec_.padding, is.h, is.w, linear_out_);
  }

  Tensor deconv_backward(const Tensor& g, bool accumulate_params) {
    const auto& is = input_.shape();
    const int kk = spec_.kernel * spec_.kernel;
    const Eigen::Index cols = static_cast<Eigen::Index>(is.n) * is.h * is.w;
    const Eigen::Index okk = static_cast<Eigen::Index>(spec_.out_channels) * kk;
    std::vector<float> dcol;
    detail::im2col(g, spec_.kernel, spec_.stride, spec_.padding, is.h, is.w, dcol);
    detail::ConstMapMat dc(dcol.data(), okk, cols);
    if (accumulate_params) {
      detail::ConstMapMat x(xcm_.data(), spec_.in_channels, cols);
      std::vector<float> dwp(wperm_.size());
      detail::MapMat dw(dwp.data(), spec_.in_channels, okk);
      dw.noalias() = x * dc.transpose();
      for (int co = 0; co < spec_.out_channels; ++co) {
        for (int ci = 0; ci < spec_.in_channels; ++ci) {
          float* dst =
              weight_.grad.data() + (static_cast<std::size_t>(co) * spec_.in_channels + ci) * kk;
          const float* src = dwp.data() + (static_cast<std::size_t>(ci) * spec_.out_channels + co) * kk;
          for (int t = 0; t < kk; ++t) dst[t] += src[t];
        }
      }
    }
    detail::ConstMapMat w(wperm_.data(), spec_.in_channels, okk);
    scratch_.resize(static_cast<std::size_t>(spec_.in_channels) * cols);
    detail::MapMat dx(scratch_.data(), spec_.in_channels, cols);
    dx.noalias() = w * dc;
    Tensor grad_in(is);
    detail::from_channel_major(scratch_.data(), grad_in);
    return grad_in;
  }

  void add_bias(Tensor& t) const {
    const auto& s = t.shape();
    const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        float* p = t.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
        const float b = bias_->value[c];
        for (std::size_t i = 0; i < hw; ++i) p[i] += b;
      }
    }
  }

  void batchnorm_forward() {
    const auto& s = linear_out_.shape();
    const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
    const double count = static_cast<double>(s.n) * hw;
    normed_ = Tensor(s);
    xhat_ = Tensor(s);
    inv_std_.assign(s.c, 0.0f);
    for (int c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const float* p = linear_out_.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) sum += p[i];
      }
      const double mean = sum / count;
      double var = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const float* p = linear_out_.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          const double d = p[i] - mean;
          var += d * d;
        }
      }
      var /= count;
      const float inv = static_cast<float>(1.0 / std::sqrt(var + kBatchNormEps));
      inv_std_[c] = inv;
      const float g = gamma_->value[c];
      const float b = beta_->value[c];
      for (int n = 0; n < s.n; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          const float xh = static_cast<float>(linear_out_[off + i] - mean) * inv;
          xhat_[off + i] = xh;
          normed_[off + i] = g * xh + b;
        }
      }
    }
  }

  Tensor batchnorm_backward(const Tensor& g, bool accumulate_params) {
    const auto& s = g.shape();
    const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
    const double count = static_cast<double>(s.n) * hw;
    Tensor dx(s);
    for (int c = 0; c < s.c; ++c) {
      double sum_dy = 0.0;
      double sum_dy_xhat = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          sum_dy += g[off + i];
          sum_dy_xhat += static_cast<double>(g[off + i]) * xhat_[off + i];
        }
      }
      if (accumulate_params) {
        gamma_->grad[c] += static_cast<float>(sum_dy_xhat);
        beta_->grad[c] += static_cast<float>(sum_dy);
      }
      const double gm = gamma_->value[c];
      const double inv = inv_std_[c];
      const double mean_dy = sum_dy / count;
      const double mean_dy_xhat = sum_dy_xhat / count;
      for (int n = 0; n < s.n; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          dx[off + i] = static_cast<float>(
              gm * inv * (g[off + i] - mean_dy - xhat_[off + i] * mean_dy_xhat));
        }
      }
    }
    return dx;
  }

  void activate(Tensor& t) const {
    switch (spec_.activation) {
      case ActivationKind::None: break;
      case ActivationKind::ReLU:
        for (auto& v : t.storage()) v = v > 0.0f ? v : 0.0f;
        break;
      case ActivationKind::LeakyReLU:
        for (auto& v : t.storage()) v = v > 0.0f ? v : kLeakySlope * v;
        break;
      case ActivationKind::Tanh:
        for (auto& v : t.storage()) v = std::tanh(v);
        break;
      case ActivationKind::Sigmoid:
        for (auto& v : t.storage()) v = 1.0f / (1.0f + std::exp(-v));
        break;
    }
  }

  void activation_backward(Tensor& g) const {
    const auto& pre = normed_.storage();
    const auto& post = output_.storage();
    auto& d = g.storage();
    switch (spec_.activation) {
      case ActivationKind::None: break;
      case ActivationKind::ReLU:
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = pre[i] > 0.0f ? d[i] : 0.0f;
        break;
      case ActivationKind::LeakyReLU:
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = pre[i] > 0.0f ? d[i] : kLeakySlope * d[i];
        break;
      case ActivationKind::Tanh:
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0f - post[i] * post[i];
        break;
      case ActivationKind::Sigmoid:
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= post[i] * (1.0f - post[i]);
        break;
    }
  }

  std::string name_;
  LayerSpec spec_;
  Parameter weight_;
  std::optional<Parameter> bias_;
  std::optional<Parameter> gamma_;
  std::optional<Parameter> beta_;

  // Forward caches consumed by backward.
  Tensor input_;
  Tensor linear_out_;
  Tensor normed_;
  Tensor xhat_;
  Tensor output_;
  std::vector<float> inv_std_;
  std::vector<float> col_;
  std::vector<float> xcm_;
  std::vector<float> wperm_;
  std::vector<float> scratch_;
};

/// Extra gradient injected at the output of one block during backward.
struct InjectedGradient {
  std::size_t block = 0;
  Tensor grad;
};

class Network {
 public:
  Network() = default;
  Network(std::string name, const std::vector<LayerSpec>& layers) : name_(std::move(name)) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (i > 0 && layers[i].in_channels != layers[i - 1].out_channels) {
        throw ValidationError("layer " + std::to_string(i) + " of '" + name_ + "' expects " +
                              std::to_string(layers[i].in_channels) + " input channels but " +
                              "layer " + std::to_string(i - 1) + " produces " +
                              std::to_string(layers[i - 1].out_channels));
      }
      blocks_.emplace_back(name_ + "." + std::to_string(i), layers[i]);
    }
  }

  // Blocks hold parameters by value; copies are deep and independent.
  Network(const Network&) = default;
  Network& operator=(const Network&) = default;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  const std::string& name() const { return name_; }
  std::size_t depth() const { return blocks_.size(); }
  Block& block(std::size_t i) { return blocks_.at(i); }
  const Block& block(std::size_t i) const { return blocks_.at(i); }

  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& b : blocks_) b.initialize(rng);
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (auto& b : blocks_) b.collect(out);
    return out;
  }

  std::vector<const Parameter*> parameters() const {
    std::vector<const Parameter*> out;
    for (auto* p : const_cast<Network*>(this)->parameters()) out.push_back(p);
    return out;
  }

  Parameter* find(const std::string& name) {
    for (auto* p : parameters()) {
      if (p->name == name) return p;
    }
    return nullptr;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->value.size();
    return n;
  }

  Shape4 output_shape(Shape4 in) const {
    for (const auto& b : blocks_) in = b.output_shape(in);
    return in;
  }

  Tensor forward(const Tensor& x) {
    const Tensor* cur = &x;
    for (auto& b : blocks_) cur = &b.forward(*cur);
    return *cur;
  }

  /// Output of block i from the most recent forward pass.
  const Tensor& activation(std::size_t i) const { return blocks_.at(i).output(); }

  Tensor backward(const Tensor& grad_out, bool accumulate_params,
                  const std::optional<InjectedGradient>& inject = std::nullopt) {
    Tensor g = grad_out;
    for (std::size_t i = blocks_.size(); i-- > 0;) {
      if (inject && inject->block == i) {
        if (inject->grad.shape() != g.shape()) {
          throw ValidationError("injected gradient shape mismatch at block " + std::to_string(i));
        }
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += inject->grad[k];
      }
      g = blocks_[i].backward(g, accumulate_params);
    }
    return g;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->grad.fill(0.0f);
  }

 private:
  std::string name_;
  std::vector<Block> blocks_;
};

}  // namespace prunegan::nn
