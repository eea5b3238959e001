// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "attrikit/tensor.hpp"

namespace attrikit {

struct FiniteDiffOptions {
  float epsilon = 1e-3f;
  // Pass when |fd - grad| <= rtol * max(|fd|, |grad|) + atol. The additive
  // floor absorbs central-difference noise from float32 loss evaluation.
  double rtol = 1e-2;
  double atol = 3e-4;
  int max_coords_per_tensor = 25;
  uint64_t seed = 0;
};

struct FiniteDiffResult {
  bool passed = true;
  double max_rel_error = 0.0;
  double max_abs_diff = 0.0;
  double worst_ratio = 0.0;  // max diff/tolerance over all coordinates
  int coords_checked = 0;
  std::string worst;  // coordinate with the largest diff/tolerance
};

/// Central finite-difference oracle. `recompute_loss` must re-run the full
/// forward pass from current tensor values and return the scalar loss; the
/// tensors' grad buffers must already hold the tape gradients under test.
/// Perturbs sampled coordinates in place (restoring them) and compares.
FiniteDiffResult check_gradients(
    const std::function<float()>& recompute_loss,
    const std::vector<std::pair<std::string, TensorPtr>>& tensors,
    const FiniteDiffOptions& opts = {});

/// Runs the finite-difference suite over every differentiable primitive and
/// a full tiny residual network, `seeds` random seeds each. Prints one line
/// per check to `log`; returns false if any check fails.
bool run_gradcheck_suite(std::ostream& log, int seeds = 20);

}  // namespace attrikit
