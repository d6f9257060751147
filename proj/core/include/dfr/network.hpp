#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "dfr/layers.hpp"
#include "dfr/loss.hpp"
#include "dfr/rng.hpp"
#include "dfr/tensor.hpp"

namespace dfr {

// Parameter gradients, one slot per layer (empty for layers without
// parameters), plus the forward loss that produced them.
template <typename T>
struct Gradients {
  std::vector<Tensor<T>> weights;
  std::vector<std::vector<T>> biases;
  T loss{};

  void accumulate(const Gradients& other) {
    for (size_t l = 0; l < weights.size(); ++l) {
      for (size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += other.weights[l][i];
      for (size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += other.biases[l][i];
    }
    loss += other.loss;
  }

  void scale(T f) {
    for (auto& w : weights)
      for (size_t i = 0; i < w.size(); ++i) w[i] *= f;
    for (auto& b : biases)
      for (T& v : b) v *= f;
    loss *= f;
  }
};

// A feed-forward stack of the layer set above. Forward on a frozen network
// is const and allocates no shared state, so concurrent inference is safe;
// training (parameter mutation) requires exclusive access.
template <typename T>
class Network {
 public:
  Network(std::vector<LayerSpec> specs, std::vector<int> input_shape, uint64_t seed)
      : input_shape_(std::move(input_shape)) {
    std::vector<int> shape = input_shape_;
    for (const LayerSpec& s : specs) {
      layers_.push_back(make_layer<T>(s));
      shape = layers_.back()->output_shape(shape);  // validates the chain
    }
    output_shape_ = shape;
    Rng rng(seed);
    for (auto& l : layers_) l->init_params(rng);
  }

  const std::vector<int>& input_shape() const { return input_shape_; }
  const std::vector<int>& output_shape() const { return output_shape_; }
  size_t layer_count() const { return layers_.size(); }
  Layer<T>& layer(size_t i) { return *layers_[i]; }
  const Layer<T>& layer(size_t i) const { return *layers_[i]; }

  size_t parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers_) {
      if (const Tensor<T>* w = l->weights()) n += w->size();
      if (const std::vector<T>* b = l->bias()) n += b->size();
    }
    return n;
  }

  Tensor<T> forward(const Tensor<T>& input) const {
    Tensor<T> x = input;
    for (const auto& l : layers_) x = l->forward(x, nullptr);
    return x;
  }

  Tensor<T> forward(const Tensor<T>& input, std::vector<LayerContext<T>>& ctxs) const {
    ctxs.resize(layers_.size());
    Tensor<T> x = input;
    for (size_t i = 0; i < layers_.size(); ++i) x = layers_[i]->forward(x, &ctxs[i]);
    return x;
  }

  Gradients<T> make_zero_gradients() const {
    Gradients<T> g;
    g.weights.resize(layers_.size());
    g.biases.resize(layers_.size());
    for (size_t i = 0; i < layers_.size(); ++i) {
      if (const Tensor<T>* w = layers_[i]->weights()) g.weights[i] = Tensor<T>::zeros_like(*w);
      if (const std::vector<T>* b = layers_[i]->bias())
        g.biases[i].assign(b->size(), T{});
    }
    return g;
  }

  T loss(const Tensor<T>& input, const Tensor<T>& target) const {
    return mae_loss(forward(input), target);
  }

  // Full reverse pass of the MAE loss for one sample.
  Gradients<T> backward(const Tensor<T>& input, const Tensor<T>& target) const {
    Gradients<T> grads = make_zero_gradients();
    accumulate_backward(input, target, grads);
    return grads;
  }

  // Same, accumulating into an existing gradient buffer (batch loop).
  void accumulate_backward(const Tensor<T>& input, const Tensor<T>& target,
                           Gradients<T>& grads) const {
    std::vector<LayerContext<T>> ctxs;
    const Tensor<T> pred = forward(input, ctxs);
    grads.loss += mae_loss(pred, target);
    Tensor<T> g = mae_loss_grad(pred, target);
    for (size_t i = layers_.size(); i-- > 0;) {
      Tensor<T>* gw = grads.weights[i].empty() ? nullptr : &grads.weights[i];
      std::vector<T>* gb = grads.biases[i].empty() ? nullptr : &grads.biases[i];
      g = layers_[i]->backward(g, ctxs[i], gw, gb);
    }
  }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<int> input_shape_;
  std::vector<int> output_shape_;
};

// Spec-style free function: gradients of the MAE loss for every parameter.
template <typename T>
Gradients<T> backward(const Network<T>& net, const Tensor<T>& input, const Tensor<T>& target) {
  return net.backward(input, target);
}

}  // namespace dfr
