// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "attrikit/tape.hpp"
#include "attrikit/tensor.hpp"

namespace attrikit {

/// Per-attribute positive/negative sample weights
///   w+ = exp((1 - p) / sigma^2),  w- = exp(p / sigma^2)
/// where p is the positive ratio of the attribute in the training split.
/// Kept in double precision; the loss casts at use.
struct AttributeWeights {
  std::vector<double> positive_weight;
  std::vector<double> negative_weight;
  std::vector<double> positive_ratio;
  double sigma = 1.0;

  size_t attribute_count() const { return positive_weight.size(); }
};

struct LossConfig {
  std::vector<double> gamma;  // per-attribute loss weight; empty means 1/M
  bool use_weighting = true;  // DeepMAR-style sample weights vs none
};

/// Computes AttributeWeights from an N x M binary label matrix
/// (row-major, values 0/1).
AttributeWeights compute_sample_weights(const std::vector<uint8_t>& labels, int n, int m,
                                        double sigma = 1.0);

/// Per-attribute weighted sigmoid binary cross-entropy from logits.
///
///   loss_m = -(1/N) sum_i w_m^i [y log p(x) + (1-y) log(1-p(x))]
///
/// with w_m^i picked from `weights` by the label (all 1 when weights is
/// null). Evaluated in the softplus form, never materializing log(sigmoid),
/// with double accumulation. Differentiable w.r.t. logits:
/// d loss_m / d x_im = w * (sigmoid(x) - y) / N.
/// Returns a length-M tensor of per-attribute losses.
TensorPtr weighted_bce(Tape& tape, const TensorPtr& logits, const TensorPtr& labels,
                       const AttributeWeights* weights);

/// total = sum_m gamma_m * loss_m, as a scalar tape op.
TensorPtr total_loss(Tape& tape, const TensorPtr& per_attribute,
                     const std::vector<double>& gamma);

/// Uniform gamma vector, 1/M each.
std::vector<double> uniform_gamma(int m);

}  // namespace attrikit
