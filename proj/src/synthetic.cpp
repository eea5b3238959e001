// SPDX-License-Identifier: Apache-2.0
#include "attrikit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace attrikit {

namespace {

constexpr float kTallRatio = 1.3416f;  // sqrt(1.8): tall shapes are 1.8:1

struct PlacedBox {
  float y0, x0, y1, x1;
  bool overlaps(const PlacedBox& o) const {
    return !(y1 < o.y0 || o.y1 < y0 || x1 < o.x0 || o.x1 < x0);
  }
};

}  // namespace

std::array<float, 2> token_half_extents(TokenShape shape, float r) {
  switch (shape) {
    case TokenShape::EllipseTall:
    case TokenShape::RectTall:
      return {r * kTallRatio, r / kTallRatio};
    default:
      return {r, r};
  }
}

bool token_contains(TokenShape shape, float cy, float cx, float r, int y, int x) {
  const float dy = static_cast<float>(y) - cy;
  const float dx = static_cast<float>(x) - cx;
  switch (shape) {
    case TokenShape::Circle:
      return dy * dy + dx * dx <= r * r;
    case TokenShape::Square:
      return std::abs(dy) <= r * 0.88f && std::abs(dx) <= r * 0.88f;
    case TokenShape::Triangle:  // upward-pointing isoceles
      return dy >= -r && dy <= r && std::abs(dx) <= (dy + r) * 0.5f;
    case TokenShape::Ring: {
      const float d2 = dy * dy + dx * dx;
      return d2 <= r * r && d2 >= (0.45f * r) * (0.45f * r);
    }
    case TokenShape::Cross:
      return (std::abs(dx) <= r * 0.32f && std::abs(dy) <= r) ||
             (std::abs(dy) <= r * 0.32f && std::abs(dx) <= r);
    case TokenShape::HBar:
      return std::abs(dy) <= r * 0.35f && std::abs(dx) <= r;
    case TokenShape::VBar:
      return std::abs(dx) <= r * 0.35f && std::abs(dy) <= r;
    case TokenShape::Diamond:
      return std::abs(dx) + std::abs(dy) <= r * 1.2f;
    case TokenShape::EllipseTall: {
      const float ax = r / kTallRatio, ay = r * kTallRatio;
      const float u = dx / ax, v = dy / ay;
      return u * u + v * v <= 1.0f;
    }
    case TokenShape::RectTall:
      return std::abs(dy) <= r * kTallRatio * 0.88f && std::abs(dx) <= r / kTallRatio * 0.88f;
  }
  return false;
}

TokenShape token_shape_from_name(const std::string& name) {
  if (name == "circle") return TokenShape::Circle;
  if (name == "square") return TokenShape::Square;
  if (name == "triangle") return TokenShape::Triangle;
  if (name == "ring") return TokenShape::Ring;
  if (name == "cross") return TokenShape::Cross;
  if (name == "hbar") return TokenShape::HBar;
  if (name == "vbar") return TokenShape::VBar;
  if (name == "diamond") return TokenShape::Diamond;
  if (name == "ellipse_tall") return TokenShape::EllipseTall;
  if (name == "rect_tall") return TokenShape::RectTall;
  throw DataError("unknown token shape: " + name);
}

std::string token_shape_name(TokenShape s) {
  switch (s) {
    case TokenShape::Circle: return "circle";
    case TokenShape::Square: return "square";
    case TokenShape::Triangle: return "triangle";
    case TokenShape::Ring: return "ring";
    case TokenShape::Cross: return "cross";
    case TokenShape::HBar: return "hbar";
    case TokenShape::VBar: return "vbar";
    case TokenShape::Diamond: return "diamond";
    case TokenShape::EllipseTall: return "ellipse_tall";
    case TokenShape::RectTall: return "rect_tall";
  }
  return "circle";
}

Region region_from_name(const std::string& name) {
  if (name == "anywhere") return Region::Anywhere;
  if (name == "upper") return Region::UpperHalf;
  if (name == "lower") return Region::LowerHalf;
  throw DataError("unknown region: " + name);
}

std::string region_name(Region r) {
  switch (r) {
    case Region::Anywhere: return "anywhere";
    case Region::UpperHalf: return "upper";
    case Region::LowerHalf: return "lower";
  }
  return "anywhere";
}

void SyntheticSpec::validate() const {
  if (count < 1) throw DataError("sample count must be positive");
  if (attributes.empty()) throw DataError("need at least one attribute definition");
  if (height_min < 16 || height_max < height_min) throw DataError("invalid image height range");
  if (aspect_min > 0.0f) {
    if (aspect_max < aspect_min || aspect_min < 1.0f)
      throw DataError("invalid aspect ratio range");
  } else if (width_min < 16 || width_max < width_min) {
    throw DataError("invalid image width range");
  }
  for (const auto& a : attributes)
    if (a.prevalence <= 0.0 || a.prevalence >= 1.0)
      throw DataError("prevalence must lie in (0,1): " + a.name);
  if (token_scale_min <= 0.0f || token_scale_max < token_scale_min)
    throw DataError("invalid token scale range");
  if (token_brightness_min <= 0.0f || token_brightness_min > 1.0f)
    throw DataError("token brightness floor must lie in (0,1]");
  if (format != "ppm" && format != "png") throw DataError("format must be ppm or png");
}

SyntheticSpec synthetic_preset(const std::string& name) {
  SyntheticSpec spec;
  if (name == "imbalanced8" || name == "imbalanced8_hard") {
    spec.height_min = spec.height_max = 64;
    spec.width_min = spec.width_max = 64;
    spec.attributes = {
        {"red_disc", TokenShape::Circle, {0.90f, 0.15f, 0.15f}, Region::Anywhere, 0.50},
        {"green_square_low", TokenShape::Square, {0.15f, 0.85f, 0.20f}, Region::LowerHalf, 0.42},
        {"blue_triangle", TokenShape::Triangle, {0.25f, 0.35f, 0.95f}, Region::Anywhere, 0.35},
        {"yellow_ring", TokenShape::Ring, {0.95f, 0.85f, 0.15f}, Region::Anywhere, 0.28},
        {"magenta_cross", TokenShape::Cross, {0.90f, 0.20f, 0.85f}, Region::Anywhere, 0.22},
        {"cyan_hbar", TokenShape::HBar, {0.15f, 0.85f, 0.85f}, Region::Anywhere, 0.16},
        {"white_diamond", TokenShape::Diamond, {0.95f, 0.95f, 0.95f}, Region::Anywhere, 0.10},
        {"orange_vbar", TokenShape::VBar, {0.95f, 0.55f, 0.10f}, Region::Anywhere, 0.05},
    };
    if (name == "imbalanced8_hard") {
      // Small dim tokens among attribute-colored clutter and occluders:
      // learnable, but with residual error like real surveillance data.
      spec.noise = 0.10f;
      spec.token_scale_min = 0.07f;
      spec.token_scale_max = 0.11f;
      spec.token_brightness_min = 0.5f;
      spec.distractor_min = 2;
      spec.distractor_max = 5;
      spec.colored_distractors = true;
      spec.occluder_min = 1;
      spec.occluder_max = 2;
    }
    return spec;
  }
  if (name == "tall4") {
    // Portrait images, aspect sampled in [2,4]. Each shape pair shares a
    // color, so squashing the aspect ratio away blurs the label boundary.
    spec.height_min = 80;
    spec.height_max = 112;
    spec.aspect_min = 2.0f;
    spec.aspect_max = 4.0f;
    spec.token_scale_min = 0.16f;
    spec.token_scale_max = 0.24f;
    spec.distractor_min = 0;
    spec.distractor_max = 2;
    spec.attributes = {
        {"red_round", TokenShape::Circle, {0.90f, 0.15f, 0.15f}, Region::Anywhere, 0.5},
        {"red_tall", TokenShape::EllipseTall, {0.90f, 0.15f, 0.15f}, Region::Anywhere, 0.5},
        {"cyan_square", TokenShape::Square, {0.15f, 0.85f, 0.85f}, Region::Anywhere, 0.5},
        {"cyan_tall", TokenShape::RectTall, {0.15f, 0.85f, 0.85f}, Region::Anywhere, 0.5},
    };
    return spec;
  }
  if (name == "balanced4") {
    spec.height_min = spec.height_max = 48;
    spec.width_min = spec.width_max = 48;
    spec.attributes = {
        {"red_disc", TokenShape::Circle, {0.90f, 0.15f, 0.15f}, Region::Anywhere, 0.5},
        {"green_square", TokenShape::Square, {0.15f, 0.85f, 0.20f}, Region::Anywhere, 0.5},
        {"blue_triangle", TokenShape::Triangle, {0.25f, 0.35f, 0.95f}, Region::Anywhere, 0.5},
        {"yellow_ring", TokenShape::Ring, {0.95f, 0.85f, 0.15f}, Region::Anywhere, 0.5},
    };
    return spec;
  }
  throw DataError("unknown synthetic preset: " + name +
                  " (want imbalanced8, imbalanced8_hard, tall4, or balanced4)");
}

namespace {

// Picks a center so the token (with half extents hy/hx plus margin) fits
// inside its region; rejection-samples against previously placed boxes.
bool place_token(Rng& rng, int h, int w, Region region, float hy, float hx,
                 std::vector<PlacedBox>& placed, float* cy, float* cx) {
  const float margin = 1.0f;
  float y_lo = hy + margin, y_hi = static_cast<float>(h - 1) - hy - margin;
  const float x_lo = hx + margin, x_hi = static_cast<float>(w - 1) - hx - margin;
  if (region == Region::UpperHalf) y_hi = std::min(y_hi, static_cast<float>(h) / 2.0f - 1.0f - hy);
  if (region == Region::LowerHalf) y_lo = std::max(y_lo, static_cast<float>(h) / 2.0f + hy);
  if (y_lo > y_hi || x_lo > x_hi) return false;
  for (int attempt = 0; attempt < 40; ++attempt) {
    const float y = rng.uniform_float(y_lo, y_hi);
    const float x = rng.uniform_float(x_lo, x_hi);
    PlacedBox box{y - hy, x - hx, y + hy, x + hx};
    bool clear = true;
    for (const auto& other : placed)
      if (box.overlaps(other)) {
        clear = false;
        break;
      }
    if (clear || attempt == 39) {
      placed.push_back(box);
      *cy = y;
      *cx = x;
      return true;
    }
  }
  return false;
}

void draw_token(Image& img, TokenShape shape, float cy, float cx, float r,
                const std::array<float, 3>& color) {
  const auto ext = token_half_extents(shape, r);
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - ext[0])));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + ext[0])));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - ext[1])));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + ext[1])));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (token_contains(shape, cy, cx, r, y, x)) {
        float* px = img.pixel(y, x);
        px[0] = color[0];
        px[1] = color[1];
        px[2] = color[2];
      }
}

}  // namespace

DatasetManifest generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir + "/images");

  const int m = static_cast<int>(spec.attributes.size());

  // Exact positive counts per attribute via independent seeded shuffles.
  std::vector<std::vector<uint8_t>> positive(static_cast<size_t>(m));
  for (int a = 0; a < m; ++a) {
    std::vector<int> order(static_cast<size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i) order[static_cast<size_t>(i)] = i;
    Rng rng(derive_seed(spec.seed, 0xbadd, static_cast<uint64_t>(a)));
    rng.shuffle(order);
    const int k = static_cast<int>(
        std::lround(spec.attributes[static_cast<size_t>(a)].prevalence * spec.count));
    positive[static_cast<size_t>(a)].assign(static_cast<size_t>(spec.count), 0);
    for (int i = 0; i < k; ++i)
      positive[static_cast<size_t>(a)][static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;
  }

  DatasetManifest manifest;
  manifest.root_dir = out_dir;
  manifest.split_tag = "all";
  for (const auto& a : spec.attributes) manifest.attribute_names.push_back(a.name);

  double mean_sum[3] = {0.0, 0.0, 0.0};
  int64_t pixel_count = 0;

  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_seed(spec.seed, 0x5a3d, static_cast<uint64_t>(i)));
    const int h = rng.uniform_int(spec.height_min, spec.height_max);
    int w;
    if (spec.aspect_min > 0.0f) {
      const float aspect = rng.uniform_float(spec.aspect_min, spec.aspect_max);
      w = std::max(16, static_cast<int>(std::lround(static_cast<float>(h) / aspect)));
    } else {
      w = rng.uniform_int(spec.width_min, spec.width_max);
    }
    Image img(h, w);
    for (size_t p = 0; p < img.data.size(); ++p)
      img.data[p] = std::clamp(spec.background + rng.uniform_float(-spec.noise, spec.noise),
                               0.0f, 1.0f);

    std::vector<PlacedBox> placed;
    const float base = static_cast<float>(std::min(h, w));

    // Distractor blobs, drawn first so tokens overwrite them. Colored
    // distractors reuse attribute colors under a non-attribute shape.
    const int distractors = rng.uniform_int(spec.distractor_min, spec.distractor_max);
    for (int d = 0; d < distractors; ++d) {
      const float r = base * rng.uniform_float(spec.token_scale_min, spec.token_scale_max);
      float cy, cx;
      if (!place_token(rng, h, w, Region::Anywhere, r, r, placed, &cy, &cx)) continue;
      std::array<float, 3> color;
      if (spec.colored_distractors) {
        const auto& attr =
            spec.attributes[static_cast<size_t>(rng.uniform_int(0, m - 1))];
        const float dim = rng.uniform_float(0.5f, 0.95f);
        color = {attr.color[0] * dim, attr.color[1] * dim, attr.color[2] * dim};
      } else {
        const float gray = rng.uniform_float(0.25f, 0.42f);
        color = {gray, gray, gray};
      }
      draw_token(img, TokenShape::Circle, cy, cx, r * rng.uniform_float(0.7f, 1.0f), color);
    }

    ManifestRecord record;
    char name[64];
    std::snprintf(name, sizeof(name), "images/img_%06d.%s", i, spec.format.c_str());
    record.path = name;
    record.labels.resize(static_cast<size_t>(m));

    for (int a = 0; a < m; ++a) {
      const auto& attr = spec.attributes[static_cast<size_t>(a)];
      const bool present = positive[static_cast<size_t>(a)][static_cast<size_t>(i)] != 0;
      record.labels[static_cast<size_t>(a)] = present ? 1 : 0;
      if (!present) continue;
      const float r = base * rng.uniform_float(spec.token_scale_min, spec.token_scale_max);
      const auto ext = token_half_extents(attr.shape, r);
      float cy, cx;
      if (!place_token(rng, h, w, attr.region, ext[0], ext[1], placed, &cy, &cx))
        throw DataError("image too small to place token for attribute " + attr.name);
      std::array<float, 3> color = attr.color;
      const float brightness = rng.uniform_float(spec.token_brightness_min, 1.0f);
      for (float& c : color) c = std::clamp(c * brightness, 0.0f, 1.0f);
      draw_token(img, attr.shape, cy, cx, r, color);
    }

    // Occluders land on top of whatever is already drawn.
    const int occluders = rng.uniform_int(spec.occluder_min, spec.occluder_max);
    for (int d = 0; d < occluders; ++d) {
      const float r = base * rng.uniform_float(spec.token_scale_min, spec.token_scale_max);
      const float gray = rng.uniform_float(0.2f, 0.45f);
      const float cy = rng.uniform_float(r, static_cast<float>(h - 1) - r);
      const float cx = rng.uniform_float(r, static_cast<float>(w - 1) - r);
      draw_token(img, TokenShape::Circle, cy, cx, r * rng.uniform_float(0.6f, 0.9f),
                 {gray, gray, gray});
    }

    write_image(img, out_dir + "/" + record.path);
    for (size_t p = 0; p < img.data.size(); p += 3) {
      mean_sum[0] += img.data[p];
      mean_sum[1] += img.data[p + 1];
      mean_sum[2] += img.data[p + 2];
    }
    pixel_count += static_cast<int64_t>(img.data.size()) / 3;
    manifest.records.push_back(std::move(record));
  }

  manifest.mean_pixel = {static_cast<float>(mean_sum[0] / static_cast<double>(pixel_count)),
                         static_cast<float>(mean_sum[1] / static_cast<double>(pixel_count)),
                         static_cast<float>(mean_sum[2] / static_cast<double>(pixel_count))};
  save_manifest_csv(manifest.attribute_names, manifest.records, out_dir + "/manifest.csv");
  save_mean_pixel(manifest.mean_pixel, out_dir + "/mean.txt");
  // Reload the sidecar so in-memory and on-disk means agree exactly.
  manifest.mean_pixel = load_mean_pixel(out_dir + "/mean.txt");
  return manifest;
}

}  // namespace attrikit
