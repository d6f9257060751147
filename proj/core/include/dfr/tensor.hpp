#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dfr/errors.hpp"

namespace dfr {

// Dense row-major n-d array, the currency of all network computation.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(checked_count(shape_), T{});
  }

  Tensor(std::vector<int> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_count(shape_) != data_.size())
      throw DimensionError("tensor: data length " + std::to_string(data_.size()) +
                           " does not match shape product");
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  // [C,H,W] indexing used by the convolution kernels.
  T& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  const T& at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  // [N,C,H,W] indexing for convolution kernel banks.
  T& at(int n, int c, int y, int x) {
    return data_[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  const T& at(int n, int c, int y, int x) const {
    return data_[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  void reshape(std::vector<int> shape) {
    if (checked_count(shape) != data_.size())
      throw DimensionError("tensor: reshape changes element count");
    shape_ = std::move(shape);
  }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  static size_t checked_count(const std::vector<int>& shape) {
    if (shape.empty()) throw DimensionError("tensor: shape must have at least one dimension");
    size_t n = 1;
    for (int d : shape) {
      if (d < 1) throw DimensionError("tensor: dimension sizes must be positive");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

}  // namespace dfr
