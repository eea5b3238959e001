// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "attrikit/config.hpp"
#include "attrikit/tape.hpp"
#include "attrikit/tensor.hpp"

namespace attrikit {

enum class HeadKind { Logistic, Dense };

/// Architecture description: a stem conv, stages of basic residual blocks,
/// global average pooling, and a multi-attribute head emitting one
/// pre-sigmoid logit per attribute.
struct NetworkConfig {
  int stem_channels = 16;
  std::vector<int> stage_blocks = {2, 2};
  std::vector<int> stage_channels = {16, 32};
  int num_attributes = 1;
  HeadKind head_kind = HeadKind::Logistic;
  int dense_hidden = 64;    // dense head only
  float dropout_rate = 0.5f;  // dense head only

  void validate() const;

  /// Weighted layers (convs + fully connected) in the ResNet counting
  /// convention: stem + 2 per basic block + head.
  int weighted_layer_count() const;

  KeyValueConfig to_kv() const;
  static NetworkConfig from_kv(const KeyValueConfig& kv);

  bool operator==(const NetworkConfig& other) const;
};

struct Conv2dLayer {
  TensorPtr weight;  // O x I x Kh x Kw
  int stride = 1;
  int padding = 1;
  TensorPtr forward(Tape& tape, const TensorPtr& x) const {
    return tape.conv2d(x, weight, nullptr, stride, padding);
  }
};

struct BatchNormLayer {
  TensorPtr scale, shift;                // trainable
  TensorPtr running_mean, running_var;   // persistent statistics
  float momentum = 0.9f;
  float epsilon = 1e-5f;
  TensorPtr forward(Tape& tape, const TensorPtr& x, bool training) const {
    return tape.batch_norm2d(x, scale, shift, running_mean, running_var, training, momentum,
                             epsilon);
  }
};

/// conv3x3 -> BN -> relu -> conv3x3 -> BN, merged with the shortcut, then
/// relu. The first block of each stage past the first downsamples with
/// stride 2 and a 1x1 projection shortcut (+BN).
struct BasicBlock {
  Conv2dLayer conv1, conv2;
  BatchNormLayer bn1, bn2;
  std::optional<Conv2dLayer> proj;
  std::optional<BatchNormLayer> proj_bn;

  TensorPtr forward(Tape& tape, const TensorPtr& x, bool training) const;
};

/// Residual feature extractor with a joint multi-attribute head. All
/// attributes share the embedding after global average pooling.
class Network {
 public:
  Network() = default;

  /// Deterministic for a fixed seed: Kaiming fan-in normals for conv/affine
  /// weights, scale=1/shift=0 for BN, zero biases.
  static Network build(const NetworkConfig& config, uint64_t seed);

  /// Deep copy: fresh tensors holding the same values.
  Network clone() const;

  /// Runs the batch through stem, stages, GAP, and head; returns N x M
  /// pre-sigmoid logits. When `retain_features` is set, keeps a handle to
  /// the final-stage activation maps for GradCAM. `dropout_rng` is only
  /// consulted by the dense head in training mode.
  TensorPtr forward_logits(Tape& tape, const TensorPtr& batch, bool training,
                           bool retain_features = false, Rng* dropout_rng = nullptr);

  const NetworkConfig& config() const { return config_; }

  /// Trainable parameters, in deterministic order, with stable names.
  std::vector<std::pair<std::string, TensorPtr>> parameters() const;
  /// Parameters plus BN running statistics; everything a checkpoint holds.
  std::vector<std::pair<std::string, TensorPtr>> state_tensors() const;
  std::vector<TensorPtr> parameter_tensors() const;

  int64_t parameter_count() const;
  void zero_all_grads() const;

  /// Final-stage activation maps retained by the last forward pass with
  /// retain_features=true (N x C x H' x W').
  const TensorPtr& last_features() const { return last_features_; }

 private:
  NetworkConfig config_;
  Conv2dLayer stem_;
  BatchNormLayer stem_bn_;
  std::vector<std::vector<BasicBlock>> stages_;
  // logistic head: fc1 only; dense head: fc1 -> relu -> dropout -> fc2
  TensorPtr fc1_weight_, fc1_bias_;
  TensorPtr fc2_weight_, fc2_bias_;
  TensorPtr last_features_;
};

/// Checkpoint format: "ATRK" magic, u32 LE version, u32 LE config length +
/// config text, u64 LE tensor count, then per tensor: u32 LE name length,
/// name bytes, u32 LE rank, rank i64 LE dims, raw f32 LE data.
void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

constexpr uint32_t kCheckpointVersion = 1;

}  // namespace attrikit
