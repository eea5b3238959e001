// SPDX-License-Identifier: Apache-2.0
#include "attrikit/optim.hpp"

namespace attrikit {

SgdNesterov::SgdNesterov(std::vector<TensorPtr> params, float lr, float momentum,
                         float weight_decay)
    : params_(std::move(params)), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
  if (lr <= 0.0f) throw ShapeError("learning rate must be positive");
  if (momentum < 0.0f || momentum >= 1.0f) throw ShapeError("momentum must be in [0,1)");
  if (weight_decay < 0.0f) throw ShapeError("weight decay must be nonnegative");
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p->data.size(), 0.0f);
}

void SgdNesterov::step() {
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = *params_[pi];
    std::vector<float>& v = velocity_[pi];
    const bool has_grad = p.grad.size() == p.data.size();
    for (size_t i = 0; i < p.data.size(); ++i) {
      const float g = (has_grad ? p.grad[i] : 0.0f) + weight_decay_ * p.data[i];
      v[i] = momentum_ * v[i] - lr_ * g;
      p.data[i] += momentum_ * v[i] - lr_ * g;
    }
  }
}

void SgdNesterov::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

}  // namespace attrikit
