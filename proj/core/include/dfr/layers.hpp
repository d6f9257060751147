#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "dfr/errors.hpp"
#include "dfr/rng.hpp"
#include "dfr/tensor.hpp"

namespace dfr {

enum class LayerKind { kConv, kMaxPool, kRelu, kFlatten, kDense };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDense: return "dense";
  }
  return "?";
}

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  // conv
  int in_channels = 0, out_channels = 0, kernel = 0, stride = 1, padding = 0;
  // maxpool
  int pool_size = 0, pool_stride = 0;
  // dense
  int in_units = 0, out_units = 0;

  static LayerSpec Conv(int in_ch, int out_ch, int k, int stride = 1, int padding = 0) {
    if (k < 1 || stride < 1 || padding < 0 || in_ch < 1 || out_ch < 1)
      throw ParameterError("conv spec: kernel and stride must be >= 1, channels positive");
    LayerSpec s;
    s.kind = LayerKind::kConv;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kernel = k;
    s.stride = stride;
    s.padding = padding;
    return s;
  }
  static LayerSpec MaxPool(int size, int stride) {
    if (size < 1 || stride < 1) throw ParameterError("maxpool spec: size and stride must be >= 1");
    LayerSpec s;
    s.kind = LayerKind::kMaxPool;
    s.pool_size = size;
    s.pool_stride = stride;
    return s;
  }
  static LayerSpec Relu() {
    LayerSpec s;
    s.kind = LayerKind::kRelu;
    return s;
  }
  static LayerSpec Flatten() {
    LayerSpec s;
    s.kind = LayerKind::kFlatten;
    return s;
  }
  static LayerSpec Dense(int in_units, int out_units) {
    if (in_units < 1 || out_units < 1) throw ParameterError("dense spec: unit counts must be >= 1");
    LayerSpec s;
    s.kind = LayerKind::kDense;
    s.in_units = in_units;
    s.out_units = out_units;
    return s;
  }
};

inline int conv_output_extent(int in, int kernel, int stride, int padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

// ---- stateless op kernels ----------------------------------------------

// Cross-correlation of input [Cin,H,W] with kernels [Cout,Cin,k,k] plus bias.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, const std::vector<T>& bias,
                 int stride, int padding) {
  if (input.rank() != 3) throw DimensionError("conv2d: input must be [C,H,W]");
  if (kernels.rank() != 4) throw DimensionError("conv2d: kernels must be [Cout,Cin,k,k]");
  if (kernels.dim(2) != kernels.dim(3)) throw DimensionError("conv2d: kernels must be square");
  if (input.dim(0) != kernels.dim(1))
    throw DimensionError("conv2d: input channels " + std::to_string(input.dim(0)) +
                         " != kernel channels " + std::to_string(kernels.dim(1)));
  if (static_cast<int>(bias.size()) != kernels.dim(0))
    throw DimensionError("conv2d: bias length != output channels");
  if (stride < 1 || padding < 0) throw ParameterError("conv2d: stride >= 1, padding >= 0");

  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = kernels.dim(0), k = kernels.dim(2);
  if (h + 2 * padding < k || w + 2 * padding < k)
    throw DimensionError("conv2d: kernel larger than padded input");
  const int oh = conv_output_extent(h, k, stride, padding);
  const int ow = conv_output_extent(w, k, stride, padding);

  Tensor<T> out({cout, oh, ow});
  for (int oc = 0; oc < cout; ++oc) {
    T* outp = out.data() + static_cast<size_t>(oc) * oh * ow;
    std::fill(outp, outp + static_cast<size_t>(oh) * ow, bias[oc]);
    for (int ic = 0; ic < cin; ++ic) {
      const T* inp = input.data() + static_cast<size_t>(ic) * h * w;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const T wv = kernels.at(oc, ic, ky, kx);
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= h) continue;
            const T* inrow = inp + static_cast<size_t>(iy) * w;
            T* outrow = outp + static_cast<size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= w) continue;
              outrow[ox] += wv * inrow[ix];
            }
          }
        }
      }
    }
  }
  return out;
}

// Window max over [C,H,W]; argmax (flat input index per output cell) routes
// gradients in the backward pass.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, int size, int stride, std::vector<int>* argmax = nullptr) {
  if (input.rank() != 3) throw DimensionError("maxpool2d: input must be [C,H,W]");
  if (size < 1 || stride < 1) throw ParameterError("maxpool2d: size and stride must be >= 1");
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h < size || w < size) throw DimensionError("maxpool2d: window larger than input");
  const int oh = (h - size) / stride + 1;
  const int ow = (w - size) / stride + 1;

  Tensor<T> out({c, oh, ow});
  if (argmax) argmax->assign(out.size(), 0);
  size_t o = 0;
  for (int ch = 0; ch < c; ++ch) {
    const T* inp = input.data() + static_cast<size_t>(ch) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++o) {
        const int y0 = oy * stride, x0 = ox * stride;
        T best = inp[static_cast<size_t>(y0) * w + x0];
        int best_idx = y0 * w + x0;
        for (int dy = 0; dy < size; ++dy) {
          const T* row = inp + static_cast<size_t>(y0 + dy) * w;
          for (int dx = 0; dx < size; ++dx) {
            if (row[x0 + dx] > best) {
              best = row[x0 + dx];
              best_idx = (y0 + dy) * w + x0 + dx;
            }
          }
        }
        out[o] = best;
        if (argmax) (*argmax)[o] = ch * h * w + best_idx;
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (size_t i = 0; i < out.size(); ++i)
    if (out[i] < T{}) out[i] = T{};
  return out;
}

// weights [m,n] * input [n] + bias [m]
template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weights, const std::vector<T>& bias) {
  if (weights.rank() != 2) throw DimensionError("dense: weights must be [m,n]");
  const int m = weights.dim(0), n = weights.dim(1);
  if (static_cast<int>(input.size()) != n)
    throw DimensionError("dense: input length " + std::to_string(input.size()) +
                         " != weight columns " + std::to_string(n));
  if (static_cast<int>(bias.size()) != m) throw DimensionError("dense: bias length != rows");

  Tensor<T> out({m});
  const T* x = input.data();
  for (int i = 0; i < m; ++i) {
    const T* wrow = weights.data() + static_cast<size_t>(i) * n;
    T acc = bias[i];
    for (int j = 0; j < n; ++j) acc += wrow[j] * x[j];
    out[i] = acc;
  }
  return out;
}

// ---- layers with parameters and backward -------------------------------

// Per-call forward state consumed by backward. Kept outside the layer so
// that inference on a frozen network stays read-only and thread-safe.
template <typename T>
struct LayerContext {
  Tensor<T> input;
  std::vector<int> argmax;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  virtual const LayerSpec& spec() const = 0;
  virtual std::vector<int> output_shape(const std::vector<int>& in_shape) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& in, LayerContext<T>* ctx) const = 0;
  // Returns the gradient w.r.t. the layer input; accumulates parameter
  // gradients into gw/gb when the layer has parameters.
  virtual Tensor<T> backward(const Tensor<T>& gout, const LayerContext<T>& ctx, Tensor<T>* gw,
                             std::vector<T>* gb) const = 0;

  virtual Tensor<T>* weights() { return nullptr; }
  virtual const Tensor<T>* weights() const { return nullptr; }
  virtual std::vector<T>* bias() { return nullptr; }
  virtual const std::vector<T>* bias() const { return nullptr; }
  virtual void init_params(Rng&) {}
};

template <typename T>
class ConvLayer final : public Layer<T> {
 public:
  explicit ConvLayer(const LayerSpec& spec)
      : spec_(spec),
        weights_({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel}),
        bias_(static_cast<size_t>(spec.out_channels), T{}) {}

  LayerKind kind() const override { return LayerKind::kConv; }
  const LayerSpec& spec() const override { return spec_; }

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    if (in.size() != 3) throw DimensionError("conv: input must be [C,H,W]");
    if (in[0] != spec_.in_channels) throw DimensionError("conv: channel mismatch");
    const int oh = conv_output_extent(in[1], spec_.kernel, spec_.stride, spec_.padding);
    const int ow = conv_output_extent(in[2], spec_.kernel, spec_.stride, spec_.padding);
    if (oh < 1 || ow < 1) throw ConfigError("conv: non-positive output extent");
    return {spec_.out_channels, oh, ow};
  }

  Tensor<T> forward(const Tensor<T>& in, LayerContext<T>* ctx) const override {
    if (ctx) ctx->input = in;
    return conv2d(in, weights_, bias_, spec_.stride, spec_.padding);
  }

  Tensor<T> backward(const Tensor<T>& gout, const LayerContext<T>& ctx, Tensor<T>* gw,
                     std::vector<T>* gb) const override {
    const Tensor<T>& in = ctx.input;
    const int cin = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int cout = gout.dim(0), oh = gout.dim(1), ow = gout.dim(2);
    const int k = spec_.kernel, stride = spec_.stride, padding = spec_.padding;

    Tensor<T> gin({cin, h, w});
    for (int oc = 0; oc < cout; ++oc) {
      const T* gp = gout.data() + static_cast<size_t>(oc) * oh * ow;
      T gbias_acc{};
      for (size_t i = 0; i < static_cast<size_t>(oh) * ow; ++i) gbias_acc += gp[i];
      (*gb)[oc] += gbias_acc;
      for (int ic = 0; ic < cin; ++ic) {
        const T* inp = in.data() + static_cast<size_t>(ic) * h * w;
        T* ginp = gin.data() + static_cast<size_t>(ic) * h * w;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const T wv = weights_.at(oc, ic, ky, kx);
            T gw_acc{};
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= h) continue;
              const T* inrow = inp + static_cast<size_t>(iy) * w;
              T* ginrow = ginp + static_cast<size_t>(iy) * w;
              const T* grow = gp + static_cast<size_t>(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= w) continue;
                gw_acc += inrow[ix] * grow[ox];
                ginrow[ix] += wv * grow[ox];
              }
            }
            gw->at(oc, ic, ky, kx) += gw_acc;
          }
        }
      }
    }
    return gin;
  }

  Tensor<T>* weights() override { return &weights_; }
  const Tensor<T>* weights() const override { return &weights_; }
  std::vector<T>* bias() override { return &bias_; }
  const std::vector<T>* bias() const override { return &bias_; }

  void init_params(Rng& rng) override {
    const double fan_in = static_cast<double>(spec_.in_channels) * spec_.kernel * spec_.kernel;
    const double limit = std::sqrt(6.0 / fan_in);
    for (size_t i = 0; i < weights_.size(); ++i)
      weights_[i] = static_cast<T>(rng.uniform(-limit, limit));
    std::fill(bias_.begin(), bias_.end(), T{});
  }

 private:
  LayerSpec spec_;
  Tensor<T> weights_;
  std::vector<T> bias_;
};

template <typename T>
class MaxPoolLayer final : public Layer<T> {
 public:
  explicit MaxPoolLayer(const LayerSpec& spec) : spec_(spec) {}

  LayerKind kind() const override { return LayerKind::kMaxPool; }
  const LayerSpec& spec() const override { return spec_; }

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    if (in.size() != 3) throw DimensionError("maxpool: input must be [C,H,W]");
    const int oh = (in[1] - spec_.pool_size) / spec_.pool_stride + 1;
    const int ow = (in[2] - spec_.pool_size) / spec_.pool_stride + 1;
    if (oh < 1 || ow < 1) throw ConfigError("maxpool: non-positive output extent");
    return {in[0], oh, ow};
  }

  Tensor<T> forward(const Tensor<T>& in, LayerContext<T>* ctx) const override {
    if (!ctx) return maxpool2d(in, spec_.pool_size, spec_.pool_stride);
    ctx->input = in;
    return maxpool2d(in, spec_.pool_size, spec_.pool_stride, &ctx->argmax);
  }

  Tensor<T> backward(const Tensor<T>& gout, const LayerContext<T>& ctx, Tensor<T>*,
                     std::vector<T>*) const override {
    Tensor<T> gin = Tensor<T>::zeros_like(ctx.input);
    for (size_t i = 0; i < gout.size(); ++i) gin[ctx.argmax[i]] += gout[i];
    return gin;
  }

 private:
  LayerSpec spec_;
};

template <typename T>
class ReluLayer final : public Layer<T> {
 public:
  explicit ReluLayer(const LayerSpec& spec) : spec_(spec) {}

  LayerKind kind() const override { return LayerKind::kRelu; }
  const LayerSpec& spec() const override { return spec_; }

  std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }

  Tensor<T> forward(const Tensor<T>& in, LayerContext<T>* ctx) const override {
    if (ctx) ctx->input = in;
    return relu(in);
  }

  Tensor<T> backward(const Tensor<T>& gout, const LayerContext<T>& ctx, Tensor<T>*,
                     std::vector<T>*) const override {
    Tensor<T> gin = gout;
    for (size_t i = 0; i < gin.size(); ++i)
      if (ctx.input[i] <= T{}) gin[i] = T{};
    return gin;
  }

 private:
  LayerSpec spec_;
};

template <typename T>
class FlattenLayer final : public Layer<T> {
 public:
  explicit FlattenLayer(const LayerSpec& spec) : spec_(spec) {}

  LayerKind kind() const override { return LayerKind::kFlatten; }
  const LayerSpec& spec() const override { return spec_; }

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    int n = 1;
    for (int d : in) n *= d;
    return {n};
  }

  Tensor<T> forward(const Tensor<T>& in, LayerContext<T>* ctx) const override {
    if (ctx) ctx->input = in;
    Tensor<T> out = in;
    out.reshape({static_cast<int>(out.size())});
    return out;
  }

  Tensor<T> backward(const Tensor<T>& gout, const LayerContext<T>& ctx, Tensor<T>*,
                     std::vector<T>*) const override {
    Tensor<T> gin = gout;
    gin.reshape(ctx.input.shape());
    return gin;
  }

 private:
  LayerSpec spec_;
};

template <typename T>
class DenseLayer final : public Layer<T> {
 public:
  explicit DenseLayer(const LayerSpec& spec)
      : spec_(spec),
        weights_({spec.out_units, spec.in_units}),
        bias_(static_cast<size_t>(spec.out_units), T{}) {}

  LayerKind kind() const override { return LayerKind::kDense; }
  const LayerSpec& spec() const override { return spec_; }

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    if (in.size() != 1 || in[0] != spec_.in_units)
      throw DimensionError("dense: expected flat input of " + std::to_string(spec_.in_units));
    return {spec_.out_units};
  }

  Tensor<T> forward(const Tensor<T>& in, LayerContext<T>* ctx) const override {
    if (ctx) ctx->input = in;
    return dense(in, weights_, bias_);
  }

  Tensor<T> backward(const Tensor<T>& gout, const LayerContext<T>& ctx, Tensor<T>* gw,
                     std::vector<T>*gb) const override {
    const int m = spec_.out_units, n = spec_.in_units;
    const T* x = ctx.input.data();
    Tensor<T> gin({n});
    for (int i = 0; i < m; ++i) {
      const T g = gout[i];
      (*gb)[i] += g;
      const T* wrow = weights_.data() + static_cast<size_t>(i) * n;
      T* gwrow = gw->data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        gwrow[j] += g * x[j];
        gin[j] += wrow[j] * g;
      }
    }
    return gin;
  }

  Tensor<T>* weights() override { return &weights_; }
  const Tensor<T>* weights() const override { return &weights_; }
  std::vector<T>* bias() override { return &bias_; }
  const std::vector<T>* bias() const override { return &bias_; }

  void init_params(Rng& rng) override {
    const double limit = std::sqrt(6.0 / static_cast<double>(spec_.in_units));
    for (size_t i = 0; i < weights_.size(); ++i)
      weights_[i] = static_cast<T>(rng.uniform(-limit, limit));
    std::fill(bias_.begin(), bias_.end(), T{});
  }

 private:
  LayerSpec spec_;
  Tensor<T> weights_;
  std::vector<T> bias_;
};

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::kConv: return std::make_unique<ConvLayer<T>>(spec);
    case LayerKind::kMaxPool: return std::make_unique<MaxPoolLayer<T>>(spec);
    case LayerKind::kRelu: return std::make_unique<ReluLayer<T>>(spec);
    case LayerKind::kFlatten: return std::make_unique<FlattenLayer<T>>(spec);
    case LayerKind::kDense: return std::make_unique<DenseLayer<T>>(spec);
  }
  throw ConfigError("unknown layer kind");
}

}  // namespace dfr
