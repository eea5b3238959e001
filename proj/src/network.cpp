// SPDX-License-Identifier: Apache-2.0
#include "attrikit/network.hpp"

#include <algorithm>

namespace attrikit {

void NetworkConfig::validate() const {
  if (stem_channels < 1) throw ShapeError("stem_channels must be positive");
  if (stage_blocks.empty() || stage_blocks.size() != stage_channels.size())
    throw ShapeError("stage_blocks and stage_channels must have equal nonzero length");
  for (int b : stage_blocks)
    if (b < 1) throw ShapeError("every stage needs at least one block");
  for (int c : stage_channels)
    if (c < 1) throw ShapeError("stage channel counts must be positive");
  if (num_attributes < 1) throw ShapeError("num_attributes must be positive");
  if (head_kind == HeadKind::Dense && dense_hidden < 1)
    throw ShapeError("dense head needs a positive hidden width");
  if (dropout_rate < 0.0f || dropout_rate >= 1.0f)
    throw ShapeError("dropout_rate must be in [0,1)");
}

int NetworkConfig::weighted_layer_count() const {
  int blocks = 0;
  for (int b : stage_blocks) blocks += b;
  return 1 + 2 * blocks + (head_kind == HeadKind::Logistic ? 1 : 2);
}

KeyValueConfig NetworkConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set_int("net.stem_channels", stem_channels);
  std::string blocks, channels;
  for (size_t i = 0; i < stage_blocks.size(); ++i) {
    if (i) {
      blocks += ",";
      channels += ",";
    }
    blocks += std::to_string(stage_blocks[i]);
    channels += std::to_string(stage_channels[i]);
  }
  kv.set("net.stage_blocks", blocks);
  kv.set("net.stage_channels", channels);
  kv.set_int("net.num_attributes", num_attributes);
  kv.set("net.head_kind", head_kind == HeadKind::Logistic ? "logistic" : "dense");
  kv.set_int("net.dense_hidden", dense_hidden);
  kv.set_double("net.dropout_rate", dropout_rate);
  return kv;
}

NetworkConfig NetworkConfig::from_kv(const KeyValueConfig& kv) {
  NetworkConfig c;
  c.stem_channels = static_cast<int>(kv.get_int("net.stem_channels", c.stem_channels));
  c.stage_blocks = kv.get_int_list("net.stage_blocks", c.stage_blocks);
  c.stage_channels = kv.get_int_list("net.stage_channels", c.stage_channels);
  c.num_attributes = static_cast<int>(kv.get_int("net.num_attributes", c.num_attributes));
  const std::string head = kv.get("net.head_kind", "logistic");
  if (head == "logistic")
    c.head_kind = HeadKind::Logistic;
  else if (head == "dense")
    c.head_kind = HeadKind::Dense;
  else
    throw FormatError("net.head_kind must be 'logistic' or 'dense', got: " + head);
  c.dense_hidden = static_cast<int>(kv.get_int("net.dense_hidden", c.dense_hidden));
  c.dropout_rate = static_cast<float>(kv.get_double("net.dropout_rate", c.dropout_rate));
  c.validate();
  return c;
}

bool NetworkConfig::operator==(const NetworkConfig& other) const {
  return stem_channels == other.stem_channels && stage_blocks == other.stage_blocks &&
         stage_channels == other.stage_channels && num_attributes == other.num_attributes &&
         head_kind == other.head_kind && dense_hidden == other.dense_hidden &&
         dropout_rate == other.dropout_rate;
}

TensorPtr BasicBlock::forward(Tape& tape, const TensorPtr& x, bool training) const {
  TensorPtr y = bn1.forward(tape, conv1.forward(tape, x), training);
  y = tape.relu(y);
  y = bn2.forward(tape, conv2.forward(tape, y), training);
  TensorPtr shortcut = x;
  if (proj) shortcut = proj_bn->forward(tape, proj->forward(tape, x), training);
  return tape.relu(tape.residual_add(y, shortcut));
}

namespace {

Conv2dLayer make_conv(int out_ch, int in_ch, int k, int stride, int padding, Rng& rng) {
  Conv2dLayer layer;
  layer.weight = Tensor::kaiming_normal({out_ch, in_ch, k, k}, in_ch * k * k, rng);
  layer.stride = stride;
  layer.padding = padding;
  return layer;
}

BatchNormLayer make_bn(int channels) {
  BatchNormLayer bn;
  bn.scale = Tensor::full({channels}, 1.0f, true);
  bn.shift = Tensor::zeros({channels}, true);
  bn.running_mean = Tensor::zeros({channels});
  bn.running_var = Tensor::full({channels}, 1.0f);
  return bn;
}

}  // namespace

Network Network::build(const NetworkConfig& config, uint64_t seed) {
  config.validate();
  Network net;
  net.config_ = config;
  Rng rng(derive_seed(seed, 0x6e657477));  // one stream, consumed in layer order

  // Small-image stem: a single 3x3 stride-1 conv.
  net.stem_ = make_conv(config.stem_channels, 3, 3, 1, 1, rng);
  net.stem_bn_ = make_bn(config.stem_channels);

  int in_ch = config.stem_channels;
  for (size_t s = 0; s < config.stage_blocks.size(); ++s) {
    const int out_ch = config.stage_channels[s];
    std::vector<BasicBlock> stage;
    for (int b = 0; b < config.stage_blocks[s]; ++b) {
      const bool downsample = (s > 0 && b == 0);
      const int stride = downsample ? 2 : 1;
      BasicBlock block;
      block.conv1 = make_conv(out_ch, in_ch, 3, stride, 1, rng);
      block.bn1 = make_bn(out_ch);
      block.conv2 = make_conv(out_ch, out_ch, 3, 1, 1, rng);
      block.bn2 = make_bn(out_ch);
      if (stride != 1 || in_ch != out_ch) {
        block.proj = make_conv(out_ch, in_ch, 1, stride, 0, rng);
        block.proj_bn = make_bn(out_ch);
      }
      stage.push_back(std::move(block));
      in_ch = out_ch;
    }
    net.stages_.push_back(std::move(stage));
  }

  const int features = config.stage_channels.back();
  if (config.head_kind == HeadKind::Logistic) {
    net.fc1_weight_ = Tensor::kaiming_normal({features, config.num_attributes}, features, rng);
    net.fc1_bias_ = Tensor::zeros({config.num_attributes}, true);
  } else {
    net.fc1_weight_ = Tensor::kaiming_normal({features, config.dense_hidden}, features, rng);
    net.fc1_bias_ = Tensor::zeros({config.dense_hidden}, true);
    net.fc2_weight_ = Tensor::kaiming_normal({config.dense_hidden, config.num_attributes},
                                             config.dense_hidden, rng);
    net.fc2_bias_ = Tensor::zeros({config.num_attributes}, true);
  }
  return net;
}

Network Network::clone() const {
  Network copy = Network::build(config_, 0);
  auto src = state_tensors();
  auto dst = copy.state_tensors();
  for (size_t i = 0; i < src.size(); ++i) dst[i].second->data = src[i].second->data;
  return copy;
}

TensorPtr Network::forward_logits(Tape& tape, const TensorPtr& batch, bool training,
                                  bool retain_features, Rng* dropout_rng) {
  if (batch->rank() != 4 || batch->dim(1) != 3)
    throw ShapeError("forward_logits expects an N x 3 x H x W batch, got " +
                     dims_to_string(batch->dims));
  if (batch->dim(2) < 1 || batch->dim(3) < 1) throw ShapeError("undersized input image");

  TensorPtr x = tape.relu(stem_bn_.forward(tape, stem_.forward(tape, batch), training));
  for (const auto& stage : stages_)
    for (const auto& block : stage) x = block.forward(tape, x, training);

  last_features_ = retain_features ? x : nullptr;

  TensorPtr pooled = tape.global_average_pool(x);
  if (config_.head_kind == HeadKind::Logistic)
    return tape.affine(pooled, fc1_weight_, fc1_bias_);

  TensorPtr h = tape.relu(tape.affine(pooled, fc1_weight_, fc1_bias_));
  if (training && config_.dropout_rate > 0.0f) {
    if (!dropout_rng) throw ShapeError("dense head training requires a dropout rng");
    h = tape.dropout(h, config_.dropout_rate, training, *dropout_rng);
  }
  return tape.affine(h, fc2_weight_, fc2_bias_);
}

std::vector<std::pair<std::string, TensorPtr>> Network::parameters() const {
  std::vector<std::pair<std::string, TensorPtr>> out;
  out.emplace_back("stem.conv.weight", stem_.weight);
  out.emplace_back("stem.bn.scale", stem_bn_.scale);
  out.emplace_back("stem.bn.shift", stem_bn_.shift);
  for (size_t s = 0; s < stages_.size(); ++s) {
    for (size_t b = 0; b < stages_[s].size(); ++b) {
      const std::string prefix = "stage" + std::to_string(s) + ".block" + std::to_string(b) + ".";
      const BasicBlock& blk = stages_[s][b];
      out.emplace_back(prefix + "conv1.weight", blk.conv1.weight);
      out.emplace_back(prefix + "bn1.scale", blk.bn1.scale);
      out.emplace_back(prefix + "bn1.shift", blk.bn1.shift);
      out.emplace_back(prefix + "conv2.weight", blk.conv2.weight);
      out.emplace_back(prefix + "bn2.scale", blk.bn2.scale);
      out.emplace_back(prefix + "bn2.shift", blk.bn2.shift);
      if (blk.proj) {
        out.emplace_back(prefix + "proj.weight", blk.proj->weight);
        out.emplace_back(prefix + "proj_bn.scale", blk.proj_bn->scale);
        out.emplace_back(prefix + "proj_bn.shift", blk.proj_bn->shift);
      }
    }
  }
  out.emplace_back("head.fc1.weight", fc1_weight_);
  out.emplace_back("head.fc1.bias", fc1_bias_);
  if (config_.head_kind == HeadKind::Dense) {
    out.emplace_back("head.fc2.weight", fc2_weight_);
    out.emplace_back("head.fc2.bias", fc2_bias_);
  }
  return out;
}

std::vector<std::pair<std::string, TensorPtr>> Network::state_tensors() const {
  auto out = parameters();
  auto add_bn = [&out](const std::string& prefix, const BatchNormLayer& bn) {
    out.emplace_back(prefix + ".running_mean", bn.running_mean);
    out.emplace_back(prefix + ".running_var", bn.running_var);
  };
  add_bn("stem.bn", stem_bn_);
  for (size_t s = 0; s < stages_.size(); ++s) {
    for (size_t b = 0; b < stages_[s].size(); ++b) {
      const std::string prefix = "stage" + std::to_string(s) + ".block" + std::to_string(b) + ".";
      add_bn(prefix + "bn1", stages_[s][b].bn1);
      add_bn(prefix + "bn2", stages_[s][b].bn2);
      if (stages_[s][b].proj) add_bn(prefix + "proj_bn", *stages_[s][b].proj_bn);
    }
  }
  return out;
}

std::vector<TensorPtr> Network::parameter_tensors() const {
  std::vector<TensorPtr> out;
  for (auto& [name, t] : parameters()) out.push_back(t);
  return out;
}

int64_t Network::parameter_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : parameters()) n += t->size();
  return n;
}

void Network::zero_all_grads() const {
  for (const auto& [name, t] : parameters()) t->zero_grad();
  if (last_features_) last_features_->zero_grad();
}

}  // namespace attrikit
