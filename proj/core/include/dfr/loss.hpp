#pragma once

#include "dfr/errors.hpp"
#include "dfr/tensor.hpp"

namespace dfr {

// Mean absolute error over the flattened elements: (1/n) * sum |pred - target|.
template <typename T>
T mae_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (!pred.same_shape(target)) throw DimensionError("mae_loss: shape mismatch");
  if (pred.size() == 0) throw ParameterError("mae_loss: empty input");
  T acc{};
  for (size_t i = 0; i < pred.size(); ++i) {
    const T d = pred[i] - target[i];
    acc += d < T{} ? -d : d;
  }
  return acc / static_cast<T>(pred.size());
}

// d(mae)/d(pred) = sign(pred - target) / n, with subgradient 0 at equality.
template <typename T>
Tensor<T> mae_loss_grad(const Tensor<T>& pred, const Tensor<T>& target) {
  if (!pred.same_shape(target)) throw DimensionError("mae_loss_grad: shape mismatch");
  if (pred.size() == 0) throw ParameterError("mae_loss_grad: empty input");
  const T inv_n = T(1) / static_cast<T>(pred.size());
  Tensor<T> g = Tensor<T>::zeros_like(pred);
  for (size_t i = 0; i < pred.size(); ++i) {
    const T d = pred[i] - target[i];
    if (d > T{})
      g[i] = inv_n;
    else if (d < T{})
      g[i] = -inv_n;
  }
  return g;
}

}  // namespace dfr
