#pragma once

#include <vector>

#include "dfr/errors.hpp"
#include "dfr/network.hpp"

namespace dfr {

// Central difference (f(x+eps) - f(x-eps)) / (2 eps); restores x on return.
template <typename T, typename F>
T central_difference(F&& f, T& x, T eps) {
  if (!(eps > T{})) throw ParameterError("central_difference: eps must be positive");
  const T saved = x;
  x = saved + eps;
  const T hi = f();
  x = saved - eps;
  const T lo = f();
  x = saved;
  return (hi - lo) / (T(2) * eps);
}

// Finite-difference estimate of every parameter gradient of the MAE loss.
// Test oracle for Network::backward; O(params) forward passes, so keep the
// network desk-scale.
template <typename T>
Gradients<T> finite_diff_grad(Network<T>& net, const Tensor<T>& input, const Tensor<T>& target,
                              T eps) {
  if (!(eps > T{})) throw ParameterError("finite_diff_grad: eps must be positive");
  Gradients<T> grads = net.make_zero_gradients();
  const auto loss = [&net, &input, &target] { return net.loss(input, target); };
  for (size_t l = 0; l < net.layer_count(); ++l) {
    if (Tensor<T>* w = net.layer(l).weights())
      for (size_t i = 0; i < w->size(); ++i)
        grads.weights[l][i] = central_difference<T>(loss, (*w)[i], eps);
    if (std::vector<T>* b = net.layer(l).bias())
      for (size_t i = 0; i < b->size(); ++i)
        grads.biases[l][i] = central_difference<T>(loss, (*b)[i], eps);
  }
  grads.loss = loss();
  return grads;
}

}  // namespace dfr
