#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dfr/errors.hpp"
#include "dfr/network.hpp"

namespace dfr {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment state for one flat parameter array.
template <typename T>
struct AdamState {
  std::vector<T> m, v;
  long t = 0;
  AdamHyper hyper;

  explicit AdamState(size_t n, AdamHyper h = {}) : m(n, T{}), v(n, T{}), hyper(h) {}
};

// One bias-corrected Adam update; caller owns the step counter t (>= 1).
template <typename T>
void adam_update(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
                 long t, const AdamHyper& h) {
  const T b1 = static_cast<T>(h.beta1), b2 = static_cast<T>(h.beta2);
  const T lr = static_cast<T>(h.lr), eps = static_cast<T>(h.epsilon);
  const T c1 = T(1) - static_cast<T>(std::pow(h.beta1, static_cast<double>(t)));
  const T c2 = T(1) - static_cast<T>(std::pow(h.beta2, static_cast<double>(t)));
  for (size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    m[i] = b1 * m[i] + (T(1) - b1) * g;
    v[i] = b2 * v[i] + (T(1) - b2) * g * g;
    const T mhat = m[i] / c1;
    const T vhat = v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw DimensionError("adam_step: parameter, gradient and state sizes differ");
  state.t += 1;
  adam_update<T>(params, grads, std::span<T>(state.m), std::span<T>(state.v), state.t, state.hyper);
}

// Adam over every parameter array of a network, one shared step counter.
template <typename T>
class NetworkAdam {
 public:
  explicit NetworkAdam(const Network<T>& net, AdamHyper h = {})
      : hyper_(h), m_(net.make_zero_gradients()), v_(net.make_zero_gradients()) {}

  long step_count() const { return t_; }
  const AdamHyper& hyper() const { return hyper_; }

  void step(Network<T>& net, const Gradients<T>& grads) {
    t_ += 1;
    for (size_t l = 0; l < net.layer_count(); ++l) {
      Tensor<T>* w = net.layer(l).weights();
      std::vector<T>* b = net.layer(l).bias();
      if (w)
        adam_update<T>({w->data(), w->size()}, {grads.weights[l].data(), grads.weights[l].size()},
                       {m_.weights[l].data(), m_.weights[l].size()},
                       {v_.weights[l].data(), v_.weights[l].size()}, t_, hyper_);
      if (b)
        adam_update<T>({b->data(), b->size()}, {grads.biases[l].data(), grads.biases[l].size()},
                       {m_.biases[l].data(), m_.biases[l].size()},
                       {v_.biases[l].data(), v_.biases[l].size()}, t_, hyper_);
    }
  }

 private:
  AdamHyper hyper_;
  Gradients<T> m_, v_;
  long t_ = 0;
};

}  // namespace dfr
