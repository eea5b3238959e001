// SPDX-License-Identifier: Apache-2.0
#include "attrikit/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace attrikit {

namespace {

uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

std::string lower_ext(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

std::vector<uint8_t> quantize(const Image& image) {
  std::vector<uint8_t> bytes(image.data.size());
  for (size_t i = 0; i < image.data.size(); ++i) bytes[i] = to_byte(image.data[i]);
  return bytes;
}

Image from_bytes(int h, int w, const std::vector<uint8_t>& bytes) {
  Image img(h, w);
  for (size_t i = 0; i < bytes.size(); ++i)
    img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

}  // namespace

void write_ppm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write image: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  const auto bytes = quantize(image);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing image: " + path);
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw FormatError("not a binary PPM (P6): " + path);
  auto next_int = [&in, &path]() {
    // skip whitespace and '#' comments between header fields
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string comment;
        std::getline(in, comment);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    int v = -1;
    in >> v;
    if (!in || v < 0) throw FormatError("malformed PPM header: " + path);
    return v;
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (maxval != 255) throw FormatError("only maxval 255 PPM supported: " + path);
  in.get();  // single whitespace after header
  std::vector<uint8_t> bytes(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw FormatError("truncated PPM payload: " + path);
  return from_bytes(h, w, bytes);
}

void write_png(const Image& image, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw DataError("cannot write image: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw DataError("libpng failure writing: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto bytes = quantize(image);
  for (int y = 0; y < image.height; ++y)
    png_write_row(png, const_cast<png_bytep>(bytes.data() + static_cast<size_t>(y) * image.width * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

Image read_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw DataError("cannot open image: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    std::fclose(fp);
    throw FormatError("libpng failure reading: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  // Normalize every variant to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<uint8_t> bytes(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    png_read_row(png, bytes.data() + static_cast<size_t>(y) * w * 3, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return from_bytes(h, w, bytes);
}

void write_image(const Image& image, const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "ppm")
    write_ppm(image, path);
  else if (ext == "png")
    write_png(image, path);
  else
    throw DataError("unsupported image extension (want .ppm or .png): " + path);
}

Image read_image(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "ppm") return read_ppm(path);
  if (ext == "png") return read_png(path);
  throw DataError("unsupported image extension (want .ppm or .png): " + path);
}

}  // namespace attrikit
