// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "attrikit/augment.hpp"
#include "attrikit/image.hpp"
#include "attrikit/network.hpp"

namespace attrikit {

/// Gradient-weighted class activation map for one (image, attribute) pair.
struct Heatmap {
  int feat_h = 0, feat_w = 0;
  std::vector<float> values;  // feat_h * feat_w, in [0,1]
  int image_h = 0, image_w = 0;
  std::vector<float> upsampled;  // image_h * image_w, bilinear
  int attribute = 0;
  float probability = 0.0f;

  /// Fraction of heatmap mass (at feature resolution) in rows >= feat_h/2.
  double lower_half_mass() const;
  /// Entropy of the mass distribution, a spread statistic in [0, log(HW)].
  double mass_entropy() const;
};

/// Runs an eval-mode forward with retained final-stage features, then
/// backpropagates from the pre-sigmoid logit of `attribute` only:
///   alpha_k = spatial mean of d logit / d A_k
///   map     = relu(sum_k alpha_k * A_k), normalized by its max
/// (all zeros stay all zeros), bilinearly upsampled to the input size.
/// `input` must already be eval-transformed and resized to the network
/// canvas. Parameter and feature gradients are cleared before returning.
Heatmap gradcam(Network& net, const Image& input, int attribute);

/// Convenience wrapper: eval transform + resize policy, then gradcam.
Heatmap gradcam_on_raw(Network& net, const Image& raw, int attribute,
                       const AugmentationConfig& config);

/// Blends a fixed blue->red colormap over the image:
/// out = (1 - alpha) * image + alpha * colormap(heat).
Image overlay(const Image& image, const Heatmap& heatmap, float alpha);

std::array<float, 3> heat_colormap(float v);

}  // namespace attrikit
