// SPDX-License-Identifier: Apache-2.0
#include "attrikit/gradcam.hpp"

#include <algorithm>
#include <cmath>

#include "attrikit/tape.hpp"

namespace attrikit {

double Heatmap::lower_half_mass() const {
  double total = 0.0, lower = 0.0;
  for (int y = 0; y < feat_h; ++y)
    for (int x = 0; x < feat_w; ++x) {
      const double v = values[static_cast<size_t>(y) * feat_w + x];
      total += v;
      if (y >= feat_h / 2) lower += v;
    }
  return total > 0.0 ? lower / total : 0.0;
}

double Heatmap::mass_entropy() const {
  double total = 0.0;
  for (float v : values) total += v;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (float v : values) {
    if (v <= 0.0f) continue;
    const double p = v / total;
    h -= p * std::log(p);
  }
  return h;
}

Heatmap gradcam(Network& net, const Image& input, int attribute) {
  if (attribute < 0 || attribute >= net.config().num_attributes)
    throw ShapeError("attribute index " + std::to_string(attribute) + " out of range (M=" +
                     std::to_string(net.config().num_attributes) + ")");

  auto batch = Tensor::zeros({1, 3, input.height, input.width});
  for (int y = 0; y < input.height; ++y)
    for (int x = 0; x < input.width; ++x) {
      const float* px = input.pixel(y, x);
      for (int c = 0; c < 3; ++c)
        batch->data[(static_cast<size_t>(c) * input.height + y) * input.width + x] = px[c];
    }

  Tape tape;
  TensorPtr logits = net.forward_logits(tape, batch, /*training=*/false,
                                        /*retain_features=*/true);
  const TensorPtr features = net.last_features();
  const float logit = logits->data[static_cast<size_t>(attribute)];
  // Backprop from the pre-sigmoid logit; sigmoid saturation would flatten
  // confident predictions' gradients.
  TensorPtr probe = tape.select_scalar(logits, attribute);
  tape.backward(probe);

  const int channels = features->dim(1), fh = features->dim(2), fw = features->dim(3);
  const int64_t hw = static_cast<int64_t>(fh) * fw;

  Heatmap heat;
  heat.feat_h = fh;
  heat.feat_w = fw;
  heat.attribute = attribute;
  heat.probability = 1.0f / (1.0f + std::exp(-logit));
  heat.values.assign(static_cast<size_t>(hw), 0.0f);

  for (int k = 0; k < channels; ++k) {
    const float* grad = features->grad.data() + static_cast<int64_t>(k) * hw;
    double alpha = 0.0;
    for (int64_t i = 0; i < hw; ++i) alpha += grad[i];
    alpha /= static_cast<double>(hw);
    const float* act = features->data.data() + static_cast<int64_t>(k) * hw;
    for (int64_t i = 0; i < hw; ++i)
      heat.values[static_cast<size_t>(i)] += static_cast<float>(alpha) * act[i];
  }
  float max_v = 0.0f;
  for (float& v : heat.values) {
    v = std::max(0.0f, v);
    max_v = std::max(max_v, v);
  }
  if (max_v > 0.0f)
    for (float& v : heat.values) v /= max_v;

  // upsample via the image helper on a single-channel-as-RGB trick
  Image feat_img(fh, fw);
  for (int y = 0; y < fh; ++y)
    for (int x = 0; x < fw; ++x) {
      float* px = feat_img.pixel(y, x);
      px[0] = px[1] = px[2] = heat.values[static_cast<size_t>(y) * fw + x];
    }
  Image up = resize_bilinear(feat_img, input.height, input.width);
  heat.image_h = input.height;
  heat.image_w = input.width;
  heat.upsampled.resize(static_cast<size_t>(input.height) * input.width);
  for (int y = 0; y < input.height; ++y)
    for (int x = 0; x < input.width; ++x)
      heat.upsampled[static_cast<size_t>(y) * input.width + x] = up.pixel(y, x)[0];

  // leave no gradient state behind on the network
  net.zero_all_grads();
  return heat;
}

Heatmap gradcam_on_raw(Network& net, const Image& raw, int attribute,
                       const AugmentationConfig& config) {
  Rng unused(0);
  Image prepared = eval_transform(raw, config);
  prepared = apply_resize_policy(prepared, config, config.eval_canvas(), false, unused);
  return gradcam(net, prepared, attribute);
}

std::array<float, 3> heat_colormap(float v) {
  // piecewise blue -> cyan -> yellow -> red; v in [0,1]
  const float c = std::clamp(v, 0.0f, 1.0f);
  auto band = [](float x) { return std::clamp(1.5f - std::abs(x), 0.0f, 1.0f); };
  return {band(4.0f * c - 3.0f), band(4.0f * c - 2.0f), band(4.0f * c - 1.0f)};
}

Image overlay(const Image& image, const Heatmap& heatmap, float alpha) {
  if (alpha < 0.0f || alpha > 1.0f) throw DataError("overlay alpha must be in [0,1]");
  if (heatmap.image_h != image.height || heatmap.image_w != image.width)
    throw ShapeError("heatmap was upsampled for a different image size");
  Image out(image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const float h = heatmap.upsampled[static_cast<size_t>(y) * image.width + x];
      const auto cmap = heat_colormap(h);
      const float* src = image.pixel(y, x);
      float* dst = out.pixel(y, x);
      for (int c = 0; c < 3; ++c) dst[c] = (1.0f - alpha) * src[c] + alpha * cmap[c];
    }
  return out;
}

}  // namespace attrikit
