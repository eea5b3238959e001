// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "attrikit/image.hpp"

namespace attrikit {

enum class ResizePolicy { Fixed, AspectPreserving };

struct AugmentationConfig {
  float flip_prob = 0.5f;
  float jitter_mul = 0.2f;      // per-channel multiplicative range [1-a, 1+a]
  float jitter_add = 0.05f;     // per-channel additive range [-b, b]
  float rotation_deg = 0.0f;    // rotation range +-deg; 0 disables (default)
  ResizePolicy policy = ResizePolicy::AspectPreserving;
  std::vector<int> size_set = {56, 64, 72, 80};  // aspect-preserving long sides
  int fixed_resize = 64;
  int fixed_crop = 64;
  bool mean_subtract = true;
  std::array<float, 3> mean_pixel = {0.0f, 0.0f, 0.0f};

  void validate() const;
  /// The square side every batch member ends up with in eval mode: the
  /// largest long side for aspect-preserving inputs, the crop for fixed.
  int eval_canvas() const;
};

/// Scales so the longer side equals `target_long_side` (aspect ratio kept),
/// then centers the content on a target x target canvas filled with `fill`.
Image resize_aspect_preserving(const Image& image, int target_long_side,
                               const std::array<float, 3>& fill);

/// Non-uniform (squash) resize to resize x resize, then a crop x crop window:
/// random position when `random_crop`, centered otherwise.
Image resize_fixed(const Image& image, int resize, int crop, bool random_crop, Rng& rng);

Image flip_horizontal(const Image& image);
Image rotate_bilinear(const Image& image, float degrees, const std::array<float, 3>& fill);

/// Photometric and geometric augmentation: flip, rotation, color jitter,
/// then mean subtraction, each per config. Resizing is applied separately at
/// batch assembly so one canvas can serve the whole batch.
Image augment(const Image& image, const AugmentationConfig& config, Rng& rng);

/// Deterministic eval-time transform: mean subtraction only.
Image eval_transform(const Image& image, const AugmentationConfig& config);

/// Applies the resize policy to an already augmented/eval-transformed image.
/// `long_side` selects the canvas for the aspect-preserving policy (sampled
/// once per batch); ignored for the fixed policy.
Image apply_resize_policy(const Image& image, const AugmentationConfig& config, int long_side,
                          bool training, Rng& rng);

/// Bilinear resize to an arbitrary size (used by both policies and GradCAM
/// upsampling).
Image resize_bilinear(const Image& image, int out_h, int out_w);

}  // namespace attrikit
