// SPDX-License-Identifier: Apache-2.0
#include "attrikit/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "attrikit/optim.hpp"
#include "attrikit/tape.hpp"

namespace attrikit {

void TrainConfig::validate() const {
  if (epochs < 1) throw DataError("epochs must be positive");
  if (batch_size < 1) throw DataError("batch_size must be positive");
  if (base_lr <= 0.0f) throw DataError("base_lr must be positive");
  if (lr_drop_factor <= 1.0) throw DataError("lr_drop_factor must exceed 1");
  if (momentum < 0.0f || momentum >= 1.0f) throw DataError("momentum must be in [0,1)");
  if (weight_decay < 0.0f) throw DataError("weight_decay must be nonnegative");
  if (sigma <= 0.0) throw DataError("sigma must be positive");
  double prev = 0.0;
  for (double m : lr_milestones) {
    if (m <= prev || m >= 1.0)
      throw DataError("lr milestones must be strictly increasing within (0,1)");
    prev = m;
  }
  aug.validate();
}

KeyValueConfig TrainConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set_int("train.epochs", epochs);
  kv.set_int("train.batch_size", batch_size);
  kv.set_double("train.base_lr", base_lr);
  std::string ms;
  for (size_t i = 0; i < lr_milestones.size(); ++i) {
    if (i) ms += ",";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lr_milestones[i]);
    ms += buf;
  }
  kv.set("train.lr_milestones", ms);
  kv.set_double("train.lr_drop_factor", lr_drop_factor);
  kv.set_double("train.momentum", momentum);
  kv.set_double("train.weight_decay", weight_decay);
  kv.set("train.weighting", deepmar_weighting ? "deepmar" : "none");
  kv.set_double("train.sigma", sigma);
  if (!gamma.empty()) {
    std::string g;
    for (size_t i = 0; i < gamma.size(); ++i) {
      if (i) g += ",";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", gamma[i]);
      g += buf;
    }
    kv.set("train.gamma", g);
  }
  kv.set_int("train.seed", static_cast<int64_t>(seed));
  kv.set_double("aug.flip_prob", aug.flip_prob);
  kv.set_double("aug.jitter_mul", aug.jitter_mul);
  kv.set_double("aug.jitter_add", aug.jitter_add);
  kv.set_double("aug.rotation_deg", aug.rotation_deg);
  kv.set("aug.policy", aug.policy == ResizePolicy::AspectPreserving ? "aspect" : "fixed");
  std::string sizes;
  for (size_t i = 0; i < aug.size_set.size(); ++i) {
    if (i) sizes += ",";
    sizes += std::to_string(aug.size_set[i]);
  }
  kv.set("aug.size_set", sizes);
  kv.set_int("aug.fixed_resize", aug.fixed_resize);
  kv.set_int("aug.fixed_crop", aug.fixed_crop);
  kv.set("aug.mean_subtract", aug.mean_subtract ? "true" : "false");
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValueConfig& kv) {
  TrainConfig c;
  c.epochs = static_cast<int>(kv.get_int("train.epochs", c.epochs));
  c.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.batch_size));
  c.base_lr = static_cast<float>(kv.get_double("train.base_lr", c.base_lr));
  c.lr_milestones = kv.get_double_list("train.lr_milestones", c.lr_milestones);
  c.lr_drop_factor = kv.get_double("train.lr_drop_factor", c.lr_drop_factor);
  c.momentum = static_cast<float>(kv.get_double("train.momentum", c.momentum));
  c.weight_decay = static_cast<float>(kv.get_double("train.weight_decay", c.weight_decay));
  const std::string weighting = kv.get("train.weighting", "deepmar");
  if (weighting == "deepmar")
    c.deepmar_weighting = true;
  else if (weighting == "none")
    c.deepmar_weighting = false;
  else
    throw FormatError("train.weighting must be 'deepmar' or 'none', got: " + weighting);
  c.sigma = kv.get_double("train.sigma", c.sigma);
  c.gamma = kv.get_double_list("train.gamma", c.gamma);
  c.seed = static_cast<uint64_t>(kv.get_int("train.seed", 0));
  c.aug.flip_prob = static_cast<float>(kv.get_double("aug.flip_prob", c.aug.flip_prob));
  c.aug.jitter_mul = static_cast<float>(kv.get_double("aug.jitter_mul", c.aug.jitter_mul));
  c.aug.jitter_add = static_cast<float>(kv.get_double("aug.jitter_add", c.aug.jitter_add));
  c.aug.rotation_deg = static_cast<float>(kv.get_double("aug.rotation_deg", c.aug.rotation_deg));
  const std::string policy = kv.get("aug.policy", "aspect");
  if (policy == "aspect")
    c.aug.policy = ResizePolicy::AspectPreserving;
  else if (policy == "fixed")
    c.aug.policy = ResizePolicy::Fixed;
  else
    throw FormatError("aug.policy must be 'aspect' or 'fixed', got: " + policy);
  c.aug.size_set = kv.get_int_list("aug.size_set", c.aug.size_set);
  c.aug.fixed_resize = static_cast<int>(kv.get_int("aug.fixed_resize", c.aug.fixed_resize));
  c.aug.fixed_crop = static_cast<int>(kv.get_int("aug.fixed_crop", c.aug.fixed_crop));
  c.aug.mean_subtract = kv.get_bool("aug.mean_subtract", c.aug.mean_subtract);
  c.validate();
  return c;
}

float lr_for_epoch(const TrainConfig& config, int epoch) {
  int drops = 0;
  for (double m : config.lr_milestones)
    if (static_cast<int>(std::floor(m * config.epochs)) < epoch) ++drops;
  return static_cast<float>(config.base_lr / std::pow(config.lr_drop_factor, drops));
}

ScoreMatrix score_split(Network& net, const DatasetManifest& split,
                        const AugmentationConfig& aug, int batch_size) {
  AugmentationConfig cfg = aug;
  cfg.mean_pixel = split.mean_pixel;
  ImageCache cache(split);
  Rng unused(0);
  const int n = split.sample_count();
  ScoreMatrix scores(n, split.attribute_count());
  Tape tape;
  tape.set_recording(false);
  for (int begin = 0; begin < n; begin += batch_size) {
    std::vector<int> indices;
    for (int i = begin; i < std::min(n, begin + batch_size); ++i) indices.push_back(i);
    Batch batch = make_batch(split, cache, indices, cfg, /*training=*/false, 0, 0, unused);
    TensorPtr probs = tape.sigmoid(net.forward_logits(tape, batch.images, /*training=*/false));
    for (size_t bi = 0; bi < indices.size(); ++bi)
      for (int j = 0; j < scores.cols; ++j)
        scores.at(indices[bi], j) = probs->data[bi * static_cast<size_t>(scores.cols) + j];
  }
  return scores;
}

MetricsReport evaluate_split(Network& net, const DatasetManifest& split,
                             const CalibrationTable& table, const AugmentationConfig& aug,
                             int batch_size) {
  if (table.attribute_count() != split.attribute_count())
    throw DataError("calibration table covers " + std::to_string(table.attribute_count()) +
                    " attributes, split has " + std::to_string(split.attribute_count()));
  const ScoreMatrix scores = score_split(net, split, aug, batch_size);
  const BinaryMatrix predictions = apply_thresholds(scores, table);
  MetricsReport report =
      compute_report(scores, split.label_matrix(), predictions, split.attribute_names);
  report.thresholds = table.thresholds;
  return report;
}

CalibrationTable calibrate_network(Network& net, const DatasetManifest& train_split,
                                   const AugmentationConfig& aug, CalibMethod method, double k,
                                   std::ostream* warn, int batch_size) {
  if (train_split.split_tag != "train")
    throw DataError("calibration accepts only the training split, got split '" +
                    train_split.split_tag + "'");
  const ScoreMatrix scores = score_split(net, train_split, aug, batch_size);
  return calibrate_table(scores, train_split.label_matrix(), train_split.attribute_names,
                         method, k, train_split.split_tag, warn);
}

RunArtifacts train(const DatasetManifest& train_split, const DatasetManifest& val_split,
                   const NetworkConfig& net_config, const TrainConfig& config,
                   const std::string& out_dir, std::ostream* console, const Network* initial) {
  config.validate();
  net_config.validate();
  if (train_split.sample_count() < 1) throw DataError("training split is empty");
  if (train_split.attribute_count() != net_config.num_attributes)
    throw DataError("network predicts " + std::to_string(net_config.num_attributes) +
                    " attributes, manifest has " + std::to_string(train_split.attribute_count()));

  std::filesystem::create_directories(out_dir);
  RunArtifacts artifacts;
  artifacts.out_dir = out_dir;
  artifacts.seed = config.seed;
  artifacts.checkpoint_best = out_dir + "/best.ckpt";
  artifacts.checkpoint_final = out_dir + "/final.ckpt";
  artifacts.log_path = out_dir + "/train.log";

  KeyValueConfig resolved = config.to_kv();
  resolved.merge(net_config.to_kv());
  artifacts.config_hash = resolved.hash();

  std::ofstream log(artifacts.log_path, std::ios::trunc);
  if (!log) throw DataError("cannot open training log: " + artifacts.log_path);
  char line[256];
  auto emit = [&](const char* text) {
    log << text;
    log.flush();
    if (console) (*console) << text << std::flush;
  };
  std::snprintf(line, sizeof(line), "# config_hash=%016llx seed=%llu\n",
                static_cast<unsigned long long>(artifacts.config_hash),
                static_cast<unsigned long long>(config.seed));
  emit(line);
  for (const auto& [k, v] : resolved.values()) log << "# " << k << "=" << v << "\n";

  const int m = train_split.attribute_count();
  AugmentationConfig aug = config.aug;
  aug.mean_pixel = train_split.mean_pixel;

  // Sample weights come from the training split only and stay frozen.
  AttributeWeights weights;
  if (config.deepmar_weighting) {
    const BinaryMatrix labels = train_split.label_matrix();
    weights = compute_sample_weights(labels.values, labels.rows, labels.cols, config.sigma);
  }
  const std::vector<double> gamma = config.gamma.empty() ? uniform_gamma(m) : config.gamma;
  if (static_cast<int>(gamma.size()) != m)
    throw DataError("gamma length does not match attribute count");

  Network net;
  if (initial) {
    if (!(initial->config() == net_config))
      throw DataError("warm-start network config does not match net_config");
    net = initial->clone();
  } else {
    net = Network::build(net_config, config.seed);
  }
  SgdNesterov optimizer(net.parameter_tensors(), config.base_lr, config.momentum,
                        config.weight_decay);
  ImageCache cache(train_split);
  Rng dropout_rng(derive_seed(config.seed, 0xd307));

  CalibrationTable naive = CalibrationTable::naive(train_split.attribute_names, "train");
  const auto t_start = std::chrono::steady_clock::now();
  std::vector<int> order(static_cast<size_t>(train_split.sample_count()));
  for (int i = 0; i < train_split.sample_count(); ++i) order[static_cast<size_t>(i)] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const float lr = lr_for_epoch(config, epoch);
    optimizer.set_lr(lr);
    Rng shuffle_rng(derive_seed(config.seed, 0x50f1e, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    Rng batch_rng(derive_seed(config.seed, 0xba7c4, static_cast<uint64_t>(epoch)));

    double epoch_loss = 0.0;
    int batches = 0;
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config.batch_size)) {
      std::vector<int> indices(
          order.begin() + static_cast<std::ptrdiff_t>(begin),
          order.begin() + static_cast<std::ptrdiff_t>(
                              std::min(order.size(), begin + static_cast<size_t>(config.batch_size))));
      Batch batch = make_batch(train_split, cache, indices, aug, /*training=*/true, config.seed,
                               epoch, batch_rng);
      Tape tape;
      TensorPtr logits = net.forward_logits(tape, batch.images, /*training=*/true,
                                            /*retain_features=*/false, &dropout_rng);
      TensorPtr per_attr =
          weighted_bce(tape, logits, batch.labels, config.deepmar_weighting ? &weights : nullptr);
      TensorPtr loss = total_loss(tape, per_attr, gamma);
      const float loss_value = loss->data[0];
      if (!std::isfinite(loss_value)) {
        std::snprintf(line, sizeof(line),
                      "# diverged: non-finite loss at epoch %d batch %d (lr %g)\n", epoch,
                      batches, static_cast<double>(lr));
        emit(line);
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch));
      }
      tape.backward(loss);
      optimizer.step();
      optimizer.zero_grad();
      epoch_loss += loss_value;
      ++batches;
    }
    epoch_loss /= std::max(1, batches);

    const MetricsReport val = evaluate_split(net, val_split, naive, config.aug);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    std::snprintf(line, sizeof(line), "epoch %d/%d loss %.6f lr %g val_f1 %.4f elapsed %.1fs\n",
                  epoch, config.epochs, epoch_loss, static_cast<double>(lr), val.example_f1,
                  elapsed);
    emit(line);

    if (epoch == 1 || val.example_f1 > artifacts.best_val_f1) {
      artifacts.best_val_f1 = val.example_f1;
      artifacts.best_epoch = epoch;
      save_checkpoint(net, artifacts.checkpoint_best);
    }
    artifacts.final_train_loss = epoch_loss;
  }

  save_checkpoint(net, artifacts.checkpoint_final);
  std::snprintf(line, sizeof(line), "# best epoch %d val_f1 %.4f\n", artifacts.best_epoch,
                artifacts.best_val_f1);
  emit(line);

  KeyValueConfig info;
  info.set("config_hash", [&] {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(artifacts.config_hash));
    return std::string(buf);
  }());
  info.set_int("seed", static_cast<int64_t>(config.seed));
  info.set("checkpoint_best", artifacts.checkpoint_best);
  info.set("checkpoint_final", artifacts.checkpoint_final);
  info.set("log", artifacts.log_path);
  info.set_int("best_epoch", artifacts.best_epoch);
  info.set_double("best_val_f1", artifacts.best_val_f1);
  std::ofstream info_out(out_dir + "/run_info.txt", std::ios::trunc);
  info_out << info.serialize();
  return artifacts;
}

}  // namespace attrikit
