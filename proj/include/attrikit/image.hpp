// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "attrikit/common.hpp"

namespace attrikit {

/// RGB image, HWC layout, float values. Stored in [0,1] for pixel data;
/// mean-subtracted images may leave that range.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> data;  // height * width * 3

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {
    if (h < 1 || w < 1) throw ShapeError("image extents must be positive");
  }

  float* pixel(int y, int x) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const float* pixel(int y, int x) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  void fill(const std::array<float, 3>& rgb) {
    for (size_t i = 0; i < data.size(); i += 3) {
      data[i] = rgb[0];
      data[i + 1] = rgb[1];
      data[i + 2] = rgb[2];
    }
  }
};

/// Binary P6 PPM with maxval 255; quantizes by round(clamp(v,0,1)*255).
void write_ppm(const Image& image, const std::string& path);
Image read_ppm(const std::string& path);

/// 8-bit RGB PNG via libpng.
void write_png(const Image& image, const std::string& path);
Image read_png(const std::string& path);

/// Dispatches on the file extension (.ppm or .png).
void write_image(const Image& image, const std::string& path);
Image read_image(const std::string& path);

}  // namespace attrikit
