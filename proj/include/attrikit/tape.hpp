// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "attrikit/tensor.hpp"

namespace attrikit {

/// Reverse-mode autodiff tape.
///
/// Every differentiable primitive records one node holding the closures and
/// saved intermediates needed for its backward pass. backward() replays the
/// nodes in exact reverse execution order; gradients accumulate additively
/// into every input that has requires_grad set, so a tensor feeding several
/// consumers receives the sum of their contributions. Output (non-leaf)
/// gradients are reset before each replay, leaf gradients are not: repeated
/// backward() calls without an optimizer-side reset keep accumulating.
class Tape {
 public:
  // --- primitive operations -------------------------------------------------

  /// 2-D convolution, NCHW input against OIKhKw kernel, optional bias (O).
  /// Pass bias = nullptr for bias-free convolutions.
  TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernel, const TensorPtr& bias,
                   int stride, int padding);

  /// Batch normalization over N,H,W per channel. Train mode normalizes by
  /// batch statistics (biased variance) and folds them into the running
  /// buffers with `running = momentum * running + (1 - momentum) * batch`;
  /// eval mode normalizes by the running buffers and mutates nothing.
  TensorPtr batch_norm2d(const TensorPtr& input, const TensorPtr& scale, const TensorPtr& shift,
                         const TensorPtr& running_mean, const TensorPtr& running_var,
                         bool training, float momentum = 0.9f, float epsilon = 1e-5f);

  /// Elementwise max(0, x). Subgradient at exactly 0 is 0.
  TensorPtr relu(const TensorPtr& input);

  /// Elementwise sum of two identically shaped tensors.
  TensorPtr residual_add(const TensorPtr& a, const TensorPtr& b);

  /// NCHW -> NC spatial mean. Backward spreads the incoming gradient
  /// uniformly, 1/(H*W) to each position.
  TensorPtr global_average_pool(const TensorPtr& input);

  /// input (N,F) * weight (F,M) + bias (M) -> (N,M).
  TensorPtr affine(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias);

  /// Numerically stable elementwise logistic sigmoid.
  TensorPtr sigmoid(const TensorPtr& input);

  /// Inverted dropout: in training mode zeroes each element with probability
  /// `rate` and scales survivors by 1/(1-rate); identity in eval mode.
  TensorPtr dropout(const TensorPtr& input, float rate, bool training, Rng& rng);

  /// Elementwise product (same dims).
  TensorPtr multiply(const TensorPtr& a, const TensorPtr& b);

  /// Sum of all elements -> scalar (1-element tensor).
  TensorPtr reduce_sum(const TensorPtr& input);

  /// Picks one element as a scalar tensor; backward scatters into that slot.
  TensorPtr select_scalar(const TensorPtr& input, int64_t flat_index);

  // --- tape control ----------------------------------------------------------

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. `loss` must
  /// be a scalar produced by this tape.
  void backward(const TensorPtr& loss);

  void clear();
  size_t node_count() const { return nodes_.size(); }

  /// With recording off, ops still compute forward but keep no backward
  /// state; use for pure inference so activations are freed eagerly.
  void set_recording(bool recording) { recording_ = recording; }
  bool recording() const { return recording_; }

  /// Extension point for modules that own their own primitives (e.g. the
  /// loss): registers a backward closure for an op already computed forward.
  void record(const TensorPtr& output, std::function<void()> backprop);

  /// Registers an op output so its gradient participates in replay resets.
  /// Used with record(); returns `output` for chaining.
  TensorPtr track_output(const TensorPtr& output);

 private:
  struct Node {
    TensorPtr output;
    std::function<void()> backprop;
  };
  std::vector<Node> nodes_;
  bool recording_ = true;
};

/// Conv output extent: floor((extent + 2*padding - kernel)/stride) + 1.
int conv_out_extent(int extent, int kernel, int stride, int padding);

}  // namespace attrikit
