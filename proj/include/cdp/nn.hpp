// Copyright 2026 The cdpbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdp/rng.hpp"
#include "cdp/tensor.hpp"

namespace cdp {

// Minimal convolutional network engine with reverse-mode gradients.
// Forward passes cache whatever backward needs; layers own their
// parameters and accumulate parameter gradients until zero_grad().
// Everything runs single-sample in (C,H,W) order; batching is a caller
// side loop, which keeps gradient accumulation order fixed and training
// bit-reproducible. A Model instance is not thread safe; concurrency is
// built from per-lane replicas with index-ordered reduction (see
// authenticator).

enum class LayerKind {
  Conv2d,
  ReLU,
  MaxPool2d,
  ResidualBlock,
  GlobalAvgPool,
  Dense,
  Sigmoid,
};

/// One entry of a model description. Field use by kind:
///   Conv2d:        a=in_ch, b=out_ch, c=kernel, d=stride, e=padding
///   MaxPool2d:     a=kernel (stride = kernel)
///   ResidualBlock: a=channels (two 3x3 convolutions and a skip)
///   Dense:         a=in, b=out
struct LayerSpec {
  LayerKind kind;
  int a = 0, b = 0, c = 0, d = 0, e = 0;

  static LayerSpec conv2d(int in_ch, int out_ch, int kernel, int stride, int padding) {
    return {LayerKind::Conv2d, in_ch, out_ch, kernel, stride, padding};
  }
  static LayerSpec relu() { return {LayerKind::ReLU}; }
  static LayerSpec max_pool(int kernel) { return {LayerKind::MaxPool2d, kernel}; }
  static LayerSpec residual(int channels) { return {LayerKind::ResidualBlock, channels}; }
  static LayerSpec global_avg_pool() { return {LayerKind::GlobalAvgPool}; }
  static LayerSpec dense(int in, int out) { return {LayerKind::Dense, in, out}; }
  static LayerSpec sigmoid() { return {LayerKind::Sigmoid}; }
};

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "Conv2d";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::MaxPool2d: return "MaxPool2d";
    case LayerKind::ResidualBlock: return "ResidualBlock";
    case LayerKind::GlobalAvgPool: return "GlobalAvgPool";
    case LayerKind::Dense: return "Dense";
    case LayerKind::Sigmoid: return "Sigmoid";
  }
  return "?";
}

/// Ordered layer list plus the index of the first head layer. Backbone
/// output (the activation entering the head) is the feature vector used
/// for analysis.
struct ModelSpec {
  std::vector<LayerSpec> layers;
  int head_index = 0;

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("ModelSpec: no layers");
    if (head_index <= 0 || head_index >= static_cast<int>(layers.size()))
      throw std::invalid_argument("ModelSpec: head_index must split backbone and head");
    if (layers.back().kind != LayerKind::Sigmoid)
      throw std::invalid_argument("ModelSpec: final layer must be Sigmoid");
  }
};

/// The default desk-scale classifier: a small residual CNN over the
/// 2-channel probe/template stack with a 2-layer dense head.
inline ModelSpec default_model_spec() {
  ModelSpec spec;
  spec.layers = {
      LayerSpec::conv2d(2, 8, 3, 1, 1),  LayerSpec::relu(),
      LayerSpec::max_pool(2),            LayerSpec::residual(8),
      LayerSpec::conv2d(8, 16, 3, 1, 1), LayerSpec::relu(),
      LayerSpec::max_pool(2),            LayerSpec::residual(16),
      LayerSpec::global_avg_pool(),
      LayerSpec::dense(16, 16),          LayerSpec::relu(),
      LayerSpec::dense(16, 1),           LayerSpec::sigmoid(),
  };
  spec.head_index = 9;  // head starts at the first Dense layer
  return spec;
}

// Sigmoid outputs are clamped away from {0,1} so cross-entropy stays finite.
inline constexpr double kSigmoidClamp = 1e-7;

namespace nn_detail {

inline void conv_out_extent(int in, int kernel, int stride, int padding, int& out) {
  out = (in + 2 * padding - kernel) / stride + 1;
  if (out <= 0) throw std::invalid_argument("conv/pool output extent would be empty");
}

// Valid output range for one kernel tap at stride 1: indices ox with
// 0 <= ox + k - pad < extent.
inline void tap_range(int k, int pad, int in_extent, int out_extent, int& lo, int& hi) {
  lo = std::max(0, pad - k);
  hi = std::min(out_extent, in_extent + pad - k);
}

// Plain cross-correlation, zero padded. in: (C,H,W), w: (O,C,K,K).
inline void conv2d_raw(const double* __restrict in, int C, int H, int W,
                       const double* __restrict wgt, const double* __restrict bias, int o_begin,
                       int o_end, int K, int stride, int pad, double* __restrict out, int OH,
                       int OW) {
  for (int o = o_begin; o < o_end; ++o) {
    double* oplane = out + static_cast<std::size_t>(o) * OH * OW;
    const double b = bias ? bias[o] : 0.0;
    for (int i = 0; i < OH * OW; ++i) oplane[i] = b;
    for (int c = 0; c < C; ++c) {
      const double* iplane = in + static_cast<std::size_t>(c) * H * W;
      const double* wbase = wgt + (static_cast<std::size_t>(o) * C + c) * K * K;
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx) {
          const double w = wbase[ky * K + kx];
          if (w == 0.0) continue;
          if (stride == 1) {
            int oy0, oy1, ox0, ox1;
            tap_range(ky, pad, H, OH, oy0, oy1);
            tap_range(kx, pad, W, OW, ox0, ox1);
            for (int oy = oy0; oy < oy1; ++oy) {
              const double* irow = iplane + static_cast<std::size_t>(oy + ky - pad) * W + (ox0 + kx - pad);
              double* orow = oplane + static_cast<std::size_t>(oy) * OW + ox0;
              for (int ox = ox0; ox < ox1; ++ox) *orow++ += w * (*irow++);
            }
          } else {
            for (int oy = 0; oy < OH; ++oy) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= H) continue;
              const double* irow = iplane + static_cast<std::size_t>(iy) * W;
              double* orow = oplane + static_cast<std::size_t>(oy) * OW;
              for (int ox = 0; ox < OW; ++ox) {
                const int ix = ox * stride + kx - pad;
                if (ix >= 0 && ix < W) orow[ox] += w * irow[ix];
              }
            }
          }
        }
    }
  }
}

}  // namespace nn_detail

class Layer {
 public:
  virtual ~Layer() = default;

  /// Output shape for a given input shape; throws a descriptive error
  /// naming the layer when shapes are incompatible.
  virtual std::vector<int> out_shape(const std::vector<int>& in) const = 0;

  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::vector<Tensor*> grads() { return {}; }

  virtual std::string name() const = 0;

 protected:
  [[noreturn]] void shape_error(const std::string& msg) const {
    throw std::invalid_argument(name() + ": " + msg);
  }
};

class Conv2dLayer : public Layer {
 public:
  Conv2dLayer(int in_ch, int out_ch, int kernel, int stride, int padding)
      : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), padding_(padding) {
    if (in_ch <= 0 || out_ch <= 0 || kernel <= 0) shape_error("channel/kernel must be positive");
    if (stride < 1) shape_error("stride must be >= 1");
    if (padding < 0) shape_error("padding must be >= 0");
    weights_ = Tensor({out_ch, in_ch, kernel, kernel});
    bias_ = Tensor({out_ch});
    weights_.requires_grad = bias_.requires_grad = true;
    grad_w_ = Tensor(weights_.shape);
    grad_b_ = Tensor(bias_.shape);
  }

  std::vector<int> out_shape(const std::vector<int>& in) const override {
    if (in.size() != 3) shape_error("expected a (C,H,W) input, got rank " + std::to_string(in.size()));
    if (in[0] != in_ch_)
      shape_error("expected " + std::to_string(in_ch_) + " input channels, got " +
                  std::to_string(in[0]));
    int oh = 0, ow = 0;
    nn_detail::conv_out_extent(in[1], kernel_, stride_, padding_, oh);
    nn_detail::conv_out_extent(in[2], kernel_, stride_, padding_, ow);
    return {out_ch_, oh, ow};
  }

  Tensor forward(const Tensor& x) override {
    auto os = out_shape(x.shape);
    input_ = x;
    Tensor out(os);
    nn_detail::conv2d_raw(x.data.data(), in_ch_, x.shape[1], x.shape[2], weights_.data.data(),
                          bias_.data.data(), 0, out_ch_, kernel_, stride_, padding_,
                          out.data.data(), os[1], os[2]);
    return out;
  }

  Tensor backward(const Tensor& g) override {
    if (input_.shape.empty()) shape_error("backward before forward");
    const int H = input_.shape[1], W = input_.shape[2];
    const int OH = g.shape[1], OW = g.shape[2];

    for (int o = 0; o < out_ch_; ++o) {
      const double* gplane = g.data.data() + static_cast<std::size_t>(o) * OH * OW;
      double acc = 0.0;
      for (int i = 0; i < OH * OW; ++i) acc += gplane[i];
      grad_b_[o] += acc;
      for (int c = 0; c < in_ch_; ++c) {
        const double* iplane = input_.data.data() + static_cast<std::size_t>(c) * H * W;
        double* wg =
            grad_w_.data.data() + (static_cast<std::size_t>(o) * in_ch_ + c) * kernel_ * kernel_;
        for (int ky = 0; ky < kernel_; ++ky)
          for (int kx = 0; kx < kernel_; ++kx) {
            double wacc = 0.0;
            if (stride_ == 1) {
              int oy0, oy1, ox0, ox1;
              nn_detail::tap_range(ky, padding_, H, OH, oy0, oy1);
              nn_detail::tap_range(kx, padding_, W, OW, ox0, ox1);
              for (int oy = oy0; oy < oy1; ++oy) {
                const double* irow =
                    iplane + static_cast<std::size_t>(oy + ky - padding_) * W + (ox0 + kx - padding_);
                const double* grow = gplane + static_cast<std::size_t>(oy) * OW + ox0;
                for (int ox = ox0; ox < ox1; ++ox) wacc += (*grow++) * (*irow++);
              }
            } else {
              for (int oy = 0; oy < OH; ++oy) {
                const int iy = oy * stride_ + ky - padding_;
                if (iy < 0 || iy >= H) continue;
                const double* irow = iplane + static_cast<std::size_t>(iy) * W;
                const double* grow = gplane + static_cast<std::size_t>(oy) * OW;
                for (int ox = 0; ox < OW; ++ox) {
                  const int ix = ox * stride_ + kx - padding_;
                  if (ix >= 0 && ix < W) wacc += grow[ox] * irow[ix];
                }
              }
            }
            wg[ky * kernel_ + kx] += wacc;
          }
      }
    }

    // The first layer of a network has no upstream consumer for dx.
    if (skip_input_grad) return Tensor(input_.shape);

    Tensor gin(input_.shape);
    for (int o = 0; o < out_ch_; ++o) {
      const double* gplane = g.data.data() + static_cast<std::size_t>(o) * OH * OW;
      for (int c = 0; c < in_ch_; ++c) {
        double* iplane = gin.data.data() + static_cast<std::size_t>(c) * H * W;
        const double* wbase =
            weights_.data.data() + (static_cast<std::size_t>(o) * in_ch_ + c) * kernel_ * kernel_;
        for (int ky = 0; ky < kernel_; ++ky)
          for (int kx = 0; kx < kernel_; ++kx) {
            const double w = wbase[ky * kernel_ + kx];
            if (w == 0.0) continue;
            if (stride_ == 1) {
              int oy0, oy1, ox0, ox1;
              nn_detail::tap_range(ky, padding_, H, OH, oy0, oy1);
              nn_detail::tap_range(kx, padding_, W, OW, ox0, ox1);
              for (int oy = oy0; oy < oy1; ++oy) {
                double* irow =
                    iplane + static_cast<std::size_t>(oy + ky - padding_) * W + (ox0 + kx - padding_);
                const double* grow = gplane + static_cast<std::size_t>(oy) * OW + ox0;
                for (int ox = ox0; ox < ox1; ++ox) *irow++ += w * (*grow++);
              }
            } else {
              for (int oy = 0; oy < OH; ++oy) {
                const int iy = oy * stride_ + ky - padding_;
                if (iy < 0 || iy >= H) continue;
                double* irow = iplane + static_cast<std::size_t>(iy) * W;
                const double* grow = gplane + static_cast<std::size_t>(oy) * OW;
                for (int ox = 0; ox < OW; ++ox) {
                  const int ix = ox * stride_ + kx - padding_;
                  if (ix >= 0 && ix < W) irow[ix] += w * grow[ox];
                }
              }
            }
          }
      }
    }
    return gin;
  }

  // Set on the stack's first layer to skip the unused input gradient.
  bool skip_input_grad = false;

  std::vector<Tensor*> params() override { return {&weights_, &bias_}; }
  std::vector<Tensor*> grads() override { return {&grad_w_, &grad_b_}; }
  std::string name() const override {
    return "Conv2d(" + std::to_string(in_ch_) + "->" + std::to_string(out_ch_) + ",k" +
           std::to_string(kernel_) + ")";
  }

  int fan_in() const { return in_ch_ * kernel_ * kernel_; }

 private:
  int in_ch_, out_ch_, kernel_, stride_, padding_;
  Tensor weights_, bias_, grad_w_, grad_b_;
  Tensor input_;
};

class ReLULayer : public Layer {
 public:
  std::vector<int> out_shape(const std::vector<int>& in) const override { return in; }

  Tensor forward(const Tensor& x) override {
    mask_.assign(x.numel(), 0);
    Tensor out = x;
    for (std::size_t i = 0; i < out.numel(); ++i) {
      if (out[i] > 0.0)
        mask_[i] = 1;
      else
        out[i] = 0.0;
    }
    return out;
  }

  Tensor backward(const Tensor& g) override {
    if (mask_.size() != g.numel()) shape_error("backward before forward");
    Tensor gin = g;
    for (std::size_t i = 0; i < gin.numel(); ++i)
      if (!mask_[i]) gin[i] = 0.0;
    return gin;
  }

  std::string name() const override { return "ReLU"; }

 private:
  std::vector<unsigned char> mask_;
};

class MaxPool2dLayer : public Layer {
 public:
  explicit MaxPool2dLayer(int kernel) : kernel_(kernel) {
    if (kernel <= 0) shape_error("kernel must be positive");
  }

  std::vector<int> out_shape(const std::vector<int>& in) const override {
    if (in.size() != 3) shape_error("expected a (C,H,W) input");
    if (in[1] < kernel_ || in[2] < kernel_) shape_error("input smaller than pooling window");
    return {in[0], in[1] / kernel_, in[2] / kernel_};
  }

  Tensor forward(const Tensor& x) override {
    auto os = out_shape(x.shape);
    in_shape_ = x.shape;
    Tensor out(os);
    argmax_.assign(out.numel(), 0);
    const int C = os[0], OH = os[1], OW = os[2], H = x.shape[1], W = x.shape[2];
    for (int c = 0; c < C; ++c) {
      const double* iplane = x.data.data() + static_cast<std::size_t>(c) * H * W;
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          double best = -1e300;
          std::size_t best_idx = 0;
          for (int ky = 0; ky < kernel_; ++ky)
            for (int kx = 0; kx < kernel_; ++kx) {
              const std::size_t idx =
                  static_cast<std::size_t>(oy * kernel_ + ky) * W + (ox * kernel_ + kx);
              if (iplane[idx] > best) {
                best = iplane[idx];
                best_idx = idx;
              }
            }
          const std::size_t o_idx = (static_cast<std::size_t>(c) * OH + oy) * OW + ox;
          out[o_idx] = best;
          argmax_[o_idx] = static_cast<std::size_t>(c) * H * W + best_idx;
        }
    }
    return out;
  }

  Tensor backward(const Tensor& g) override {
    if (argmax_.size() != g.numel()) shape_error("backward before forward");
    Tensor gin(in_shape_);
    for (std::size_t i = 0; i < g.numel(); ++i) gin[argmax_[i]] += g[i];
    return gin;
  }

  std::string name() const override { return "MaxPool2d(k" + std::to_string(kernel_) + ")"; }

 private:
  int kernel_;
  std::vector<int> in_shape_;
  std::vector<std::size_t> argmax_;
};

/// Basic residual block: x + conv2(relu(conv1(x))), followed by ReLU.
/// Both convolutions are 3x3, stride 1, padding 1 on a fixed channel count.
class ResidualBlockLayer : public Layer {
 public:
  explicit ResidualBlockLayer(int channels)
      : channels_(channels),
        conv1_(channels, channels, 3, 1, 1),
        conv2_(channels, channels, 3, 1, 1) {}

  std::vector<int> out_shape(const std::vector<int>& in) const override {
    if (in.size() != 3 || in[0] != channels_)
      shape_error("expected (C=" + std::to_string(channels_) + ",H,W) input");
    return in;
  }

  Tensor forward(const Tensor& x) override {
    out_shape(x.shape);
    Tensor y = conv2_.forward(relu1_.forward(conv1_.forward(x)));
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] += x[i];
    return relu2_.forward(y);
  }

  Tensor backward(const Tensor& g) override {
    Tensor gy = relu2_.backward(g);
    Tensor gbranch = conv1_.backward(relu1_.backward(conv2_.backward(gy)));
    for (std::size_t i = 0; i < gbranch.numel(); ++i) gbranch[i] += gy[i];
    return gbranch;
  }

  std::vector<Tensor*> params() override {
    auto p = conv1_.params();
    auto q = conv2_.params();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }
  std::vector<Tensor*> grads() override {
    auto p = conv1_.grads();
    auto q = conv2_.grads();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }

  std::string name() const override { return "ResidualBlock(" + std::to_string(channels_) + ")"; }

 private:
  int channels_;
  Conv2dLayer conv1_, conv2_;
  ReLULayer relu1_, relu2_;
};

class GlobalAvgPoolLayer : public Layer {
 public:
  std::vector<int> out_shape(const std::vector<int>& in) const override {
    if (in.size() != 3) shape_error("expected a (C,H,W) input");
    return {in[0]};
  }

  Tensor forward(const Tensor& x) override {
    in_shape_ = x.shape;
    const int C = x.shape[0];
    const std::size_t hw = static_cast<std::size_t>(x.shape[1]) * x.shape[2];
    Tensor out({C});
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      const double* p = x.data.data() + c * hw;
      for (std::size_t i = 0; i < hw; ++i) acc += p[i];
      out[c] = acc / static_cast<double>(hw);
    }
    return out;
  }

  Tensor backward(const Tensor& g) override {
    if (in_shape_.empty()) shape_error("backward before forward");
    const std::size_t hw = static_cast<std::size_t>(in_shape_[1]) * in_shape_[2];
    Tensor gin(in_shape_);
    for (int c = 0; c < in_shape_[0]; ++c) {
      const double v = g[c] / static_cast<double>(hw);
      double* p = gin.data.data() + c * hw;
      for (std::size_t i = 0; i < hw; ++i) p[i] = v;
    }
    return gin;
  }

  std::string name() const override { return "GlobalAvgPool"; }

 private:
  std::vector<int> in_shape_;
};

class DenseLayer : public Layer {
 public:
  DenseLayer(int in, int out) : in_(in), out_(out) {
    if (in <= 0 || out <= 0) shape_error("sizes must be positive");
    weights_ = Tensor({out, in});
    bias_ = Tensor({out});
    weights_.requires_grad = bias_.requires_grad = true;
    grad_w_ = Tensor(weights_.shape);
    grad_b_ = Tensor(bias_.shape);
  }

  std::vector<int> out_shape(const std::vector<int>& in) const override {
    if (in.size() != 1 || in[0] != in_)
      shape_error("expected a flat input of size " + std::to_string(in_));
    return {out_};
  }

  Tensor forward(const Tensor& x) override {
    out_shape(x.shape);
    input_ = x;
    Tensor out({out_});
    for (int o = 0; o < out_; ++o) {
      double acc = bias_[o];
      const double* w = weights_.data.data() + static_cast<std::size_t>(o) * in_;
      for (int i = 0; i < in_; ++i) acc += w[i] * x[i];
      out[o] = acc;
    }
    return out;
  }

  Tensor backward(const Tensor& g) override {
    if (input_.shape.empty()) shape_error("backward before forward");
    Tensor gin({in_});
    for (int o = 0; o < out_; ++o) {
      grad_b_[o] += g[o];
      double* wg = grad_w_.data.data() + static_cast<std::size_t>(o) * in_;
      const double* w = weights_.data.data() + static_cast<std::size_t>(o) * in_;
      for (int i = 0; i < in_; ++i) {
        wg[i] += g[o] * input_[i];
        gin[i] += g[o] * w[i];
      }
    }
    return gin;
  }

  std::vector<Tensor*> params() override { return {&weights_, &bias_}; }
  std::vector<Tensor*> grads() override { return {&grad_w_, &grad_b_}; }
  std::string name() const override {
    return "Dense(" + std::to_string(in_) + "->" + std::to_string(out_) + ")";
  }

  int fan_in() const { return in_; }
  bool is_final_dense = false;

 private:
  int in_, out_;
  Tensor weights_, bias_, grad_w_, grad_b_;
  Tensor input_;
};

class SigmoidLayer : public Layer {
 public:
  std::vector<int> out_shape(const std::vector<int>& in) const override { return in; }

  Tensor forward(const Tensor& x) override {
    Tensor out = x;
    for (auto& v : out.data) {
      v = 1.0 / (1.0 + std::exp(-v));
      if (v < kSigmoidClamp) v = kSigmoidClamp;
      if (v > 1.0 - kSigmoidClamp) v = 1.0 - kSigmoidClamp;
    }
    out_ = out;
    return out;
  }

  Tensor backward(const Tensor& g) override {
    if (out_.shape.empty()) shape_error("backward before forward");
    Tensor gin = g;
    for (std::size_t i = 0; i < gin.numel(); ++i) gin[i] *= out_[i] * (1.0 - out_[i]);
    return gin;
  }

  std::string name() const override { return "Sigmoid"; }

 private:
  Tensor out_;
};

inline std::unique_ptr<Layer> make_layer(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::Conv2d: return std::make_unique<Conv2dLayer>(s.a, s.b, s.c, s.d, s.e);
    case LayerKind::ReLU: return std::make_unique<ReLULayer>();
    case LayerKind::MaxPool2d: return std::make_unique<MaxPool2dLayer>(s.a);
    case LayerKind::ResidualBlock: return std::make_unique<ResidualBlockLayer>(s.a);
    case LayerKind::GlobalAvgPool: return std::make_unique<GlobalAvgPoolLayer>();
    case LayerKind::Dense: return std::make_unique<DenseLayer>(s.a, s.b);
    case LayerKind::Sigmoid: return std::make_unique<SigmoidLayer>();
  }
  throw std::invalid_argument("make_layer: unknown layer kind");
}

/// A built model: layers instantiated from a spec, with parameter access,
/// feature extraction at the head boundary and reverse-mode gradients.
class Model {
 public:
  explicit Model(ModelSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (const auto& ls : spec_.layers) layers_.push_back(make_layer(ls));
    if (auto* c = dynamic_cast<Conv2dLayer*>(layers_.front().get())) c->skip_input_grad = true;
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelSpec& spec() const { return spec_; }

  /// Walks the layer stack symbolically and throws a configuration error
  /// naming the offending layer if any shapes are incompatible.
  std::vector<int> check_shapes(const std::vector<int>& input_shape) const {
    std::vector<int> s = input_shape;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      try {
        s = layers_[i]->out_shape(s);
      } catch (const std::exception& e) {
        throw std::invalid_argument("layer " + std::to_string(i) + " " + e.what());
      }
    }
    if (s != std::vector<int>{1})
      throw std::invalid_argument("model must end in a single sigmoid output");
    return s;
  }

  int feature_dim(const std::vector<int>& input_shape) const {
    std::vector<int> s = input_shape;
    for (int i = 0; i < spec_.head_index; ++i) s = layers_[i]->out_shape(s);
    std::size_t n = 1;
    for (int e : s) n *= static_cast<std::size_t>(e);
    return static_cast<int>(n);
  }

  /// Deterministic He-normal initialization; the final Dense layer starts
  /// at zero so an untrained model scores everything exactly 0.5.
  void init_params(std::uint64_t seed) {
    auto eng = make_engine(mix_seed({seed, fnv1a64("init")}));
    GaussianSampler gauss(eng);
    DenseLayer* last_dense = nullptr;
    for (auto& l : layers_)
      if (auto* d = dynamic_cast<DenseLayer*>(l.get())) last_dense = d;
    for (auto& l : layers_) {
      if (auto* c = dynamic_cast<Conv2dLayer*>(l.get())) {
        const double scale = std::sqrt(2.0 / c->fan_in());
        for (auto& v : c->params()[0]->data) v = scale * gauss();
        c->params()[1]->zero();
      } else if (auto* rb = dynamic_cast<ResidualBlockLayer*>(l.get())) {
        auto ps = rb->params();  // conv1 w,b, conv2 w,b
        const int ch = ps[0]->shape[1];
        const double scale = std::sqrt(2.0 / (ch * 9));
        for (std::size_t t = 0; t < ps.size(); t += 2) {
          for (auto& v : ps[t]->data) v = scale * gauss();
          ps[t + 1]->zero();
        }
      } else if (auto* d = dynamic_cast<DenseLayer*>(l.get())) {
        if (d == last_dense) {
          d->params()[0]->zero();
          d->params()[1]->zero();
        } else {
          const double scale = std::sqrt(2.0 / d->fan_in());
          for (auto& v : d->params()[0]->data) v = scale * gauss();
          d->params()[1]->zero();
        }
      }
    }
  }

  Tensor forward(const Tensor& x) {
    ensure_finite(x, "Model::forward");
    Tensor t = x;
    for (auto& l : layers_) t = l->forward(t);
    forward_done_ = true;
    return t;
  }

  /// Backbone activation (the head input) flattened to a vector.
  Tensor features(const Tensor& x) {
    ensure_finite(x, "Model::features");
    Tensor t = x;
    for (int i = 0; i < spec_.head_index; ++i) t = layers_[i]->forward(t);
    Tensor flat({static_cast<int>(t.numel())});
    flat.data = t.data;
    return flat;
  }

  /// Propagates d(loss)/d(output) back through the stack, accumulating
  /// parameter gradients. Requires a preceding forward pass.
  void backward(const Tensor& grad_out) {
    if (!forward_done_)
      throw std::logic_error("Model::backward: backward called before forward");
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  }

  void zero_grad() {
    for (auto& l : layers_)
      for (auto* g : l->grads()) g->zero();
  }

  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }

  std::vector<Tensor*> gradients() {
    std::vector<Tensor*> out;
    for (auto& l : layers_)
      for (auto* g : l->grads()) out.push_back(g);
    return out;
  }

  std::size_t num_params() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->numel();
    return n;
  }

  std::vector<Tensor> snapshot_params() {
    std::vector<Tensor> out;
    for (auto* p : parameters()) out.push_back(*p);
    return out;
  }

  void restore_params(const std::vector<Tensor>& snap) {
    auto ps = parameters();
    if (snap.size() != ps.size())
      throw std::invalid_argument("Model::restore_params: parameter count mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (!ps[i]->same_shape(snap[i]))
        throw std::invalid_argument("Model::restore_params: parameter shape mismatch");
      ps[i]->data = snap[i].data;
    }
  }

 private:
  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  bool forward_done_ = false;
};

}  // namespace cdp
