// SPDX-License-Identifier: Apache-2.0
#include "attrikit/loss.hpp"

#include <cmath>

namespace attrikit {

namespace {

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double sigmoid_double(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

AttributeWeights compute_sample_weights(const std::vector<uint8_t>& labels, int n, int m,
                                        double sigma) {
  if (n < 1 || m < 1) throw DataError("compute_sample_weights requires a nonempty label matrix");
  if (labels.size() != static_cast<size_t>(n) * m)
    throw ShapeError("label matrix size does not match n*m");
  if (sigma <= 0.0) throw DataError("sigma must be positive");
  AttributeWeights w;
  w.sigma = sigma;
  w.positive_weight.resize(static_cast<size_t>(m));
  w.negative_weight.resize(static_cast<size_t>(m));
  w.positive_ratio.resize(static_cast<size_t>(m));
  const double s2 = sigma * sigma;
  for (int a = 0; a < m; ++a) {
    int64_t pos = 0;
    for (int i = 0; i < n; ++i) {
      const uint8_t y = labels[static_cast<size_t>(i) * m + a];
      if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
      pos += y;
    }
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    w.positive_ratio[static_cast<size_t>(a)] = p;
    w.positive_weight[static_cast<size_t>(a)] = std::exp((1.0 - p) / s2);
    w.negative_weight[static_cast<size_t>(a)] = std::exp(p / s2);
  }
  return w;
}

TensorPtr weighted_bce(Tape& tape, const TensorPtr& logits, const TensorPtr& labels,
                       const AttributeWeights* weights) {
  if (logits->rank() != 2 || !logits->same_dims(*labels))
    throw ShapeError("weighted_bce expects matching N x M logits and labels");
  const int n = logits->dim(0), m = logits->dim(1);
  if (weights && static_cast<int>(weights->attribute_count()) != m)
    throw ShapeError("weight table covers a different attribute count");
  for (float y : labels->data)
    if (y != 0.0f && y != 1.0f) throw DataError("labels must be 0 or 1");

  auto out = Tensor::zeros({m});
  out->requires_grad = logits->requires_grad;
  for (int a = 0; a < m; ++a) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const size_t idx = static_cast<size_t>(i) * m + a;
      const double x = logits->data[idx];
      const bool pos = labels->data[idx] == 1.0f;
      // y=1: -log p(x) = softplus(-x); y=0: -log(1-p(x)) = softplus(x)
      const double term = pos ? softplus(-x) : softplus(x);
      const double w = weights ? (pos ? weights->positive_weight[static_cast<size_t>(a)]
                                      : weights->negative_weight[static_cast<size_t>(a)])
                               : 1.0;
      acc += w * term;
    }
    out->data[static_cast<size_t>(a)] = static_cast<float>(acc / n);
  }

  if (!out->requires_grad) return out;
  AttributeWeights wcopy;  // keep weights alive in the closure by value
  if (weights) wcopy = *weights;
  const bool has_w = weights != nullptr;
  tape.record(out, [logits, labels, out, wcopy, has_w, n, m]() {
    logits->ensure_grad();
    const double inv_n = 1.0 / n;
    for (int a = 0; a < m; ++a) {
      const double g = out->grad[static_cast<size_t>(a)];
      if (g == 0.0) continue;
      for (int i = 0; i < n; ++i) {
        const size_t idx = static_cast<size_t>(i) * m + a;
        const bool pos = labels->data[idx] == 1.0f;
        const double w = has_w ? (pos ? wcopy.positive_weight[static_cast<size_t>(a)]
                                      : wcopy.negative_weight[static_cast<size_t>(a)])
                               : 1.0;
        const double p = sigmoid_double(logits->data[idx]);
        logits->grad[idx] +=
            static_cast<float>(g * w * (p - (pos ? 1.0 : 0.0)) * inv_n);
      }
    }
  });
  return out;
}

TensorPtr total_loss(Tape& tape, const TensorPtr& per_attribute,
                     const std::vector<double>& gamma) {
  if (per_attribute->rank() != 1)
    throw ShapeError("total_loss expects a rank-1 per-attribute loss vector");
  const int m = per_attribute->dim(0);
  if (static_cast<int>(gamma.size()) != m)
    throw ShapeError("gamma length does not match attribute count");
  for (double g : gamma)
    if (g <= 0.0) throw DataError("gamma entries must be positive");

  auto out = Tensor::zeros({1});
  out->requires_grad = per_attribute->requires_grad;
  double acc = 0.0;
  for (int a = 0; a < m; ++a) acc += gamma[static_cast<size_t>(a)] * per_attribute->data[static_cast<size_t>(a)];
  out->data[0] = static_cast<float>(acc);

  if (!out->requires_grad) return out;
  tape.record(out, [per_attribute, out, gamma, m]() {
    per_attribute->ensure_grad();
    const float g = out->grad[0];
    for (int a = 0; a < m; ++a)
      per_attribute->grad[static_cast<size_t>(a)] +=
          g * static_cast<float>(gamma[static_cast<size_t>(a)]);
  });
  return out;
}

std::vector<double> uniform_gamma(int m) {
  if (m < 1) throw ShapeError("attribute count must be positive");
  return std::vector<double>(static_cast<size_t>(m), 1.0 / m);
}

}  // namespace attrikit
