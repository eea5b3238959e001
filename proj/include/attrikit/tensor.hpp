// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "attrikit/common.hpp"

namespace attrikit {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major float32 array with an optional same-shaped gradient buffer.
class Tensor {
 public:
  std::vector<int> dims;
  std::vector<float> data;
  std::vector<float> grad;  // empty until ensure_grad(); same length as data otherwise
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<int> d, float fill = 0.0f) : dims(std::move(d)) {
    data.assign(static_cast<size_t>(count(dims)), fill);
  }

  static int64_t count(const std::vector<int>& dims) {
    int64_t n = 1;
    for (int d : dims) {
      if (d <= 0) throw ShapeError("tensor extents must be positive");
      n *= d;
    }
    return n;
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return dims[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(dims.size()); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0f);
  }
  void drop_grad() { grad.clear(); }

  bool same_dims(const Tensor& other) const { return dims == other.dims; }

  bool all_finite() const {
    for (float v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  static TensorPtr zeros(std::vector<int> dims, bool requires_grad = false) {
    auto t = std::make_shared<Tensor>(std::move(dims));
    t->requires_grad = requires_grad;
    return t;
  }

  static TensorPtr full(std::vector<int> dims, float value, bool requires_grad = false) {
    auto t = std::make_shared<Tensor>(std::move(dims), value);
    t->requires_grad = requires_grad;
    return t;
  }

  static TensorPtr from(std::vector<int> dims, std::initializer_list<float> values,
                        bool requires_grad = false) {
    auto t = zeros(std::move(dims), requires_grad);
    if (static_cast<int64_t>(values.size()) != t->size())
      throw ShapeError("initializer length does not match tensor extents");
    std::copy(values.begin(), values.end(), t->data.begin());
    return t;
  }

  static TensorPtr from(std::vector<int> dims, std::vector<float> values,
                        bool requires_grad = false) {
    if (static_cast<int64_t>(values.size()) != count(dims))
      throw ShapeError("value vector length does not match tensor extents");
    auto t = std::make_shared<Tensor>();
    t->dims = std::move(dims);
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    return t;
  }

  /// Kaiming fan-in scaled normal fill, used for conv and affine weights.
  static TensorPtr kaiming_normal(std::vector<int> dims, int fan_in, Rng& rng) {
    auto t = zeros(std::move(dims), true);
    float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (auto& v : t->data) v = rng.normal_float(0.0f, stddev);
    return t;
  }
};

inline std::string dims_to_string(const std::vector<int>& dims) {
  std::string s = "[";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

}  // namespace attrikit
