// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "attrikit/calibration.hpp"
#include "attrikit/dataset.hpp"
#include "attrikit/loss.hpp"
#include "attrikit/metrics.hpp"
#include "attrikit/network.hpp"

namespace attrikit {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  float base_lr = 0.1f;
  // Milestones as fractions of the total epochs; the drop lands after epoch
  // floor(milestone * epochs). Mirrors a 180/300-of-360 schedule shape.
  std::vector<double> lr_milestones = {0.5, 0.83};
  double lr_drop_factor = 10.0;
  float momentum = 0.9f;
  float weight_decay = 1e-4f;
  bool deepmar_weighting = true;
  double sigma = 1.0;
  std::vector<double> gamma;  // empty -> uniform 1/M
  AugmentationConfig aug;
  uint64_t seed = 0;

  void validate() const;
  KeyValueConfig to_kv() const;
  static TrainConfig from_kv(const KeyValueConfig& kv);
};

/// Learning rate for a 1-based epoch index under the milestone schedule.
float lr_for_epoch(const TrainConfig& config, int epoch);

struct RunArtifacts {
  std::string out_dir;
  std::string checkpoint_best;
  std::string checkpoint_final;
  std::string log_path;
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  double final_train_loss = 0.0;
};

/// Runs the full training loop: per epoch, seeded shuffle -> batches ->
/// forward -> weighted BCE -> gamma-weighted total -> backward -> Nesterov
/// SGD step, with the milestone lr schedule. DeepMAR weights are computed
/// once from the training split and frozen. Saves the best checkpoint by
/// validation example-F1 (naive 0.5 thresholds) and the final checkpoint.
/// Aborts with NumericError if the loss goes non-finite. Pass `initial` to
/// warm-start from an existing network instead of a fresh seeded build (its
/// config must match net_config).
RunArtifacts train(const DatasetManifest& train_split, const DatasetManifest& val_split,
                   const NetworkConfig& net_config, const TrainConfig& config,
                   const std::string& out_dir, std::ostream* console = nullptr,
                   const Network* initial = nullptr);

/// Eval-mode probabilities for a whole split (batched, deterministic).
ScoreMatrix score_split(Network& net, const DatasetManifest& split,
                        const AugmentationConfig& aug, int batch_size = 16);

/// Scores the split, binarizes with the table, and computes the full report.
MetricsReport evaluate_split(Network& net, const DatasetManifest& split,
                             const CalibrationTable& table, const AugmentationConfig& aug,
                             int batch_size = 16);

/// Threshold calibration from the training split only; rejects any other
/// split so validation/test labels cannot leak in.
CalibrationTable calibrate_network(Network& net, const DatasetManifest& train_split,
                                   const AugmentationConfig& aug, CalibMethod method, double k,
                                   std::ostream* warn = nullptr, int batch_size = 16);

}  // namespace attrikit
