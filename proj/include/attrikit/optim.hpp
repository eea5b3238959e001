// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "attrikit/tensor.hpp"

namespace attrikit {

/// SGD with Nesterov momentum and additive L2 weight decay.
///
/// Exact update rule, applied per parameter element:
///   g = grad + weight_decay * param
///   v = momentum * v - lr * g
///   param += momentum * v - lr * g
/// With momentum = 0 this reduces to plain SGD, param -= lr * g.
class SgdNesterov {
 public:
  SgdNesterov(std::vector<TensorPtr> params, float lr, float momentum = 0.9f,
              float weight_decay = 0.0f);

  void step();
  void zero_grad();

  void set_lr(float lr) { lr_ = lr; }
  float lr() const { return lr_; }
  float momentum() const { return momentum_; }
  float weight_decay() const { return weight_decay_; }

 private:
  std::vector<TensorPtr> params_;
  std::vector<std::vector<float>> velocity_;
  float lr_;
  float momentum_;
  float weight_decay_;
};

}  // namespace attrikit
