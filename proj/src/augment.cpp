// SPDX-License-Identifier: Apache-2.0
#include "attrikit/augment.hpp"

#include <algorithm>
#include <cmath>

namespace attrikit {

void AugmentationConfig::validate() const {
  if (flip_prob < 0.0f || flip_prob > 1.0f) throw DataError("flip probability must be in [0,1]");
  if (jitter_mul < 0.0f || jitter_add < 0.0f) throw DataError("jitter amplitudes must be >= 0");
  if (rotation_deg < 0.0f) throw DataError("rotation range must be >= 0");
  if (policy == ResizePolicy::AspectPreserving) {
    if (size_set.empty()) throw DataError("aspect-preserving size set must be nonempty");
    for (int s : size_set)
      if (s < 8) throw DataError("resize targets must be >= 8");
  } else {
    if (fixed_crop > fixed_resize) throw DataError("crop must not exceed resize");
    if (fixed_crop < 1) throw DataError("crop must be positive");
  }
}

int AugmentationConfig::eval_canvas() const {
  if (policy == ResizePolicy::Fixed) return fixed_crop;
  return *std::max_element(size_set.begin(), size_set.end());
}

Image resize_bilinear(const Image& image, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize target must be positive");
  Image out(out_h, out_w);
  const float sy = static_cast<float>(image.height) / out_h;
  const float sx = static_cast<float>(image.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    // sample at pixel centers
    const float fy = std::max(0.0f, (y + 0.5f) * sy - 0.5f);
    const int y0 = std::min(static_cast<int>(fy), image.height - 1);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const float wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const float fx = std::max(0.0f, (x + 0.5f) * sx - 0.5f);
      const int x0 = std::min(static_cast<int>(fx), image.width - 1);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const float wx = fx - x0;
      const float* p00 = image.pixel(y0, x0);
      const float* p01 = image.pixel(y0, x1);
      const float* p10 = image.pixel(y1, x0);
      const float* p11 = image.pixel(y1, x1);
      float* o = out.pixel(y, x);
      for (int c = 0; c < 3; ++c) {
        const float top = p00[c] * (1.0f - wx) + p01[c] * wx;
        const float bot = p10[c] * (1.0f - wx) + p11[c] * wx;
        o[c] = top * (1.0f - wy) + bot * wy;
      }
    }
  }
  return out;
}

Image resize_aspect_preserving(const Image& image, int target_long_side,
                               const std::array<float, 3>& fill) {
  if (target_long_side < 8) throw DataError("resize target must be >= 8");
  int content_h, content_w;
  if (image.height >= image.width) {
    content_h = target_long_side;
    content_w = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(image.width) * target_long_side /
                                        image.height)));
  } else {
    content_w = target_long_side;
    content_h = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(image.height) * target_long_side /
                                        image.width)));
  }
  Image content = resize_bilinear(image, content_h, content_w);
  Image canvas(target_long_side, target_long_side);
  canvas.fill(fill);
  const int off_y = (target_long_side - content_h) / 2;
  const int off_x = (target_long_side - content_w) / 2;
  for (int y = 0; y < content_h; ++y)
    std::copy_n(content.pixel(y, 0), static_cast<size_t>(content_w) * 3,
                canvas.pixel(y + off_y, off_x));
  return canvas;
}

Image resize_fixed(const Image& image, int resize, int crop, bool random_crop, Rng& rng) {
  if (crop > resize) throw DataError("crop must not exceed resize");
  Image squashed = resize_bilinear(image, resize, resize);
  if (crop == resize) return squashed;
  const int max_off = resize - crop;
  const int off_y = random_crop ? rng.uniform_int(0, max_off) : max_off / 2;
  const int off_x = random_crop ? rng.uniform_int(0, max_off) : max_off / 2;
  Image out(crop, crop);
  for (int y = 0; y < crop; ++y)
    std::copy_n(squashed.pixel(y + off_y, off_x), static_cast<size_t>(crop) * 3,
                out.pixel(y, 0));
  return out;
}

Image flip_horizontal(const Image& image) {
  Image out(image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const float* src = image.pixel(y, image.width - 1 - x);
      float* dst = out.pixel(y, x);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  return out;
}

Image rotate_bilinear(const Image& image, float degrees, const std::array<float, 3>& fill) {
  const float rad = degrees * 3.14159265358979323846f / 180.0f;
  const float cs = std::cos(rad), sn = std::sin(rad);
  const float cy = (image.height - 1) * 0.5f, cx = (image.width - 1) * 0.5f;
  Image out(image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      // inverse-map the output pixel into the source
      const float dy = y - cy, dx = x - cx;
      const float sy = cs * dy + sn * dx + cy;
      const float sx = -sn * dy + cs * dx + cx;
      float* o = out.pixel(y, x);
      if (sy < 0.0f || sx < 0.0f || sy > image.height - 1 || sx > image.width - 1) {
        o[0] = fill[0];
        o[1] = fill[1];
        o[2] = fill[2];
        continue;
      }
      const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
      const int y1 = std::min(y0 + 1, image.height - 1);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const float wy = sy - y0, wx = sx - x0;
      const float* p00 = image.pixel(y0, x0);
      const float* p01 = image.pixel(y0, x1);
      const float* p10 = image.pixel(y1, x0);
      const float* p11 = image.pixel(y1, x1);
      for (int c = 0; c < 3; ++c) {
        const float top = p00[c] * (1.0f - wx) + p01[c] * wx;
        const float bot = p10[c] * (1.0f - wx) + p11[c] * wx;
        o[c] = top * (1.0f - wy) + bot * wy;
      }
    }
  }
  return out;
}

Image augment(const Image& image, const AugmentationConfig& config, Rng& rng) {
  config.validate();
  Image out = image;
  if (config.flip_prob > 0.0f && rng.bernoulli(config.flip_prob)) out = flip_horizontal(out);
  if (config.rotation_deg > 0.0f) {
    const float deg = rng.uniform_float(-config.rotation_deg, config.rotation_deg);
    out = rotate_bilinear(out, deg, config.mean_pixel);
  }
  if (config.jitter_mul > 0.0f || config.jitter_add > 0.0f) {
    std::array<float, 3> mul, add;
    for (int c = 0; c < 3; ++c) {
      mul[c] = rng.uniform_float(1.0f - config.jitter_mul, 1.0f + config.jitter_mul);
      add[c] = rng.uniform_float(-config.jitter_add, config.jitter_add);
    }
    for (size_t i = 0; i < out.data.size(); i += 3)
      for (int c = 0; c < 3; ++c)
        out.data[i + c] = std::clamp(out.data[i + c] * mul[c] + add[c], 0.0f, 1.0f);
  }
  if (config.mean_subtract) {
    for (size_t i = 0; i < out.data.size(); i += 3)
      for (int c = 0; c < 3; ++c) out.data[i + c] -= config.mean_pixel[c];
  }
  return out;
}

Image eval_transform(const Image& image, const AugmentationConfig& config) {
  Image out = image;
  if (config.mean_subtract) {
    for (size_t i = 0; i < out.data.size(); i += 3)
      for (int c = 0; c < 3; ++c) out.data[i + c] -= config.mean_pixel[c];
  }
  return out;
}

Image apply_resize_policy(const Image& image, const AugmentationConfig& config, int long_side,
                          bool training, Rng& rng) {
  // Mean subtraction already zeroed the padding target, so fill with zeros
  // when it ran; otherwise fill with the dataset mean directly.
  const std::array<float, 3> fill =
      config.mean_subtract ? std::array<float, 3>{0.0f, 0.0f, 0.0f} : config.mean_pixel;
  if (config.policy == ResizePolicy::AspectPreserving)
    return resize_aspect_preserving(image, long_side, fill);
  return resize_fixed(image, config.fixed_resize, config.fixed_crop, training, rng);
}

}  // namespace attrikit
