// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "attrikit/dataset.hpp"

namespace attrikit {

enum class TokenShape {
  Circle,
  Square,
  Triangle,
  Ring,
  Cross,
  HBar,
  VBar,
  Diamond,
  EllipseTall,  // 1.8:1 tall ellipse, same area as Circle at equal radius
  RectTall      // 1.8:1 tall rectangle
};

enum class Region { Anywhere, UpperHalf, LowerHalf };

TokenShape token_shape_from_name(const std::string& name);
std::string token_shape_name(TokenShape s);
Region region_from_name(const std::string& name);
std::string region_name(Region r);

struct SyntheticAttribute {
  std::string name;
  TokenShape shape = TokenShape::Circle;
  std::array<float, 3> color = {1.0f, 0.2f, 0.2f};
  Region region = Region::Anywhere;
  double prevalence = 0.5;
};

/// Recipe for a rendered attribute dataset: each attribute is present in a
/// sample iff its visual token was drawn (inside its region). Positive
/// counts are exact: round(prevalence * count) samples per attribute,
/// chosen by a seeded shuffle.
struct SyntheticSpec {
  int height_min = 64, height_max = 64;
  int width_min = 64, width_max = 64;
  // When aspect_min > 0, width is derived per sample as height / aspect with
  // the aspect ratio drawn uniformly from [aspect_min, aspect_max] (portrait
  // images), and the width range is ignored.
  float aspect_min = 0.0f, aspect_max = 0.0f;
  int count = 0;
  uint64_t seed = 0;
  std::vector<SyntheticAttribute> attributes;
  int distractor_min = 1, distractor_max = 3;
  // Distractors normally render as neutral gray blobs; with colored
  // distractors they borrow attribute colors (wrong shapes), so color alone
  // stops identifying an attribute.
  bool colored_distractors = false;
  // Occluders are gray blobs drawn after the tokens, partially hiding them.
  int occluder_min = 0, occluder_max = 0;
  float background = 0.12f;
  float noise = 0.03f;
  float token_scale_min = 0.09f;  // token radius as a fraction of min(H,W)
  float token_scale_max = 0.14f;
  float token_brightness_min = 0.85f;  // per-token brightness jitter range low end
  std::string format = "ppm";

  void validate() const;
};

/// Named dataset recipes: "imbalanced8" (64px, prevalences 0.50 down to
/// 0.05, one lower-half attribute), "imbalanced8_hard" (same labels, small
/// occluded tokens among attribute-colored clutter), "tall4" (portrait
/// images, aspect 2:1 to 4:1, shape pairs sharing a color), "balanced4".
SyntheticSpec synthetic_preset(const std::string& name);

/// Renders `spec.count` images into out_dir/images, writes manifest.csv and
/// mean.txt, and returns the full manifest (split tag "all"). Deterministic
/// for a fixed spec.
DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

/// True iff (y, x) lies inside `shape` centered at (cy, cx) with radius r.
bool token_contains(TokenShape shape, float cy, float cx, float r, int y, int x);

/// Token half-extents (hy, hx) used for placement and region containment.
std::array<float, 2> token_half_extents(TokenShape shape, float r);

}  // namespace attrikit
