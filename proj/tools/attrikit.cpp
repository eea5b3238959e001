// SPDX-License-Identifier: Apache-2.0
//
// attrikit - multi-label attribute recognition toolkit.
//
// Subcommands: gen-data, train, calibrate, eval, interpret, gradcheck.
// Every subcommand accepts --config with flat key=value lines; explicit
// flags override file values. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "attrikit/dataset.hpp"
#include "attrikit/gradcam.hpp"
#include "attrikit/gradcheck.hpp"
#include "attrikit/synthetic.hpp"
#include "attrikit/trainer.hpp"

namespace ak = attrikit;

namespace {

ak::KeyValueConfig load_config_or_empty(const std::string& path) {
  if (path.empty()) return {};
  return ak::KeyValueConfig::load_file(path);
}

int run_gen_data(const std::string& out_dir, const std::string& preset, int n_train, int n_val,
                 int n_test, uint64_t seed, const std::string& format) {
  ak::SyntheticSpec spec = ak::synthetic_preset(preset);
  spec.count = n_train + n_val + n_test;
  spec.seed = seed;
  spec.format = format;
  ak::DatasetManifest manifest = ak::generate_synthetic(spec, out_dir);
  ak::write_split_files(out_dir, manifest.records, n_train, n_val, n_test);
  ak::check_split_disjointness(out_dir);
  std::cout << "generated " << manifest.sample_count() << " images ("
            << n_train << "/" << n_val << "/" << n_test << " train/val/test) in " << out_dir
            << "\n";
  return 0;
}

int run_train(const std::string& manifest_dir, const std::string& out_dir,
              const ak::KeyValueConfig& cfg) {
  ak::NetworkConfig net_config = ak::NetworkConfig::from_kv(cfg);
  ak::TrainConfig train_config = ak::TrainConfig::from_kv(cfg);
  ak::DatasetManifest train_split = ak::load_split(manifest_dir, "train");
  ak::DatasetManifest val_split = ak::load_split(manifest_dir, "val");
  if (net_config.num_attributes != train_split.attribute_count()) {
    // Default the head width to the dataset when the config did not pin it.
    net_config.num_attributes = train_split.attribute_count();
    net_config.validate();
  }
  ak::RunArtifacts artifacts =
      ak::train(train_split, val_split, net_config, train_config, out_dir, &std::cout);
  std::cout << "best checkpoint: " << artifacts.checkpoint_best << " (epoch "
            << artifacts.best_epoch << ", val F1 " << artifacts.best_val_f1 << ")\n";
  return 0;
}

int run_calibrate(const std::string& checkpoint, const std::string& manifest_dir,
                  const std::string& method, double k, const std::string& out_path,
                  const ak::KeyValueConfig& cfg) {
  ak::Network net = ak::load_checkpoint(checkpoint);
  ak::DatasetManifest train_split = ak::load_split(manifest_dir, "train");
  ak::TrainConfig tc = ak::TrainConfig::from_kv(cfg);
  ak::CalibrationTable table =
      ak::calibrate_network(net, train_split, tc.aug, ak::calib_method_from_name(method), k,
                            &std::cerr, tc.batch_size);
  table.save(out_path);
  std::cout << "wrote calibration table (" << method << ") to " << out_path << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& manifest_dir,
             const std::string& split, const std::string& table_path,
             const std::string& out_path, const ak::KeyValueConfig& cfg) {
  ak::Network net = ak::load_checkpoint(checkpoint);
  ak::DatasetManifest data = ak::load_split(manifest_dir, split);
  ak::CalibrationTable table =
      table_path.empty() ? ak::CalibrationTable::naive(data.attribute_names, "train")
                         : ak::CalibrationTable::load(table_path);
  ak::TrainConfig tc = ak::TrainConfig::from_kv(cfg);
  ak::MetricsReport report = ak::evaluate_split(net, data, table, tc.aug, tc.batch_size);
  report.write(std::cout);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw ak::DataError("cannot write report: " + out_path);
    out << "# split=" << split << "\n";
    report.write(out);
  }
  return 0;
}

int run_interpret(const std::string& checkpoint, const std::string& manifest_dir,
                  const std::string& split, const std::string& samples_arg,
                  const std::string& attribute_arg, const std::string& table_path,
                  const std::string& out_dir, float alpha, const std::string& format,
                  const ak::KeyValueConfig& cfg) {
  ak::Network net = ak::load_checkpoint(checkpoint);
  ak::DatasetManifest data = ak::load_split(manifest_dir, split);
  ak::TrainConfig tc = ak::TrainConfig::from_kv(cfg);
  ak::AugmentationConfig aug = tc.aug;
  aug.mean_pixel = data.mean_pixel;
  ak::CalibrationTable table =
      table_path.empty() ? ak::CalibrationTable::naive(data.attribute_names, "train")
                         : ak::CalibrationTable::load(table_path);

  std::vector<int> attributes;
  if (attribute_arg == "all") {
    for (int a = 0; a < data.attribute_count(); ++a) attributes.push_back(a);
  } else {
    int found = -1;
    for (int a = 0; a < data.attribute_count(); ++a)
      if (data.attribute_names[static_cast<size_t>(a)] == attribute_arg) found = a;
    if (found < 0) {
      try {
        found = std::stoi(attribute_arg);
      } catch (const std::exception&) {
        throw ak::UsageError("unknown attribute: " + attribute_arg);
      }
    }
    attributes.push_back(found);
  }

  std::filesystem::create_directories(out_dir);
  for (const auto& part : ak::split_string(samples_arg, ',')) {
    const int index = std::stoi(ak::trim_string(part));
    if (index < 0 || index >= data.sample_count())
      throw ak::DataError("sample index out of range: " + std::to_string(index));
    const ak::Image raw = ak::read_image(data.resolve(data.records[static_cast<size_t>(index)]));
    // Display base: same geometry as the network input, original colors.
    ak::AugmentationConfig display = aug;
    display.mean_subtract = false;
    ak::Rng unused(0);
    const ak::Image base =
        ak::apply_resize_policy(raw, display, display.eval_canvas(), false, unused);
    for (int a : attributes) {
      ak::Heatmap heat = ak::gradcam_on_raw(net, raw, a, aug);
      const ak::Image blended = ak::overlay(base, heat, alpha);
      const std::string name = std::to_string(index) + "_" +
                               data.attribute_names[static_cast<size_t>(a)];
      ak::write_image(blended, out_dir + "/" + name + "." + format);
      std::ofstream sidecar(out_dir + "/" + name + ".txt", std::ios::trunc);
      const double threshold = heat.probability >= table.thresholds[static_cast<size_t>(a)]
                                   ? table.thresholds[static_cast<size_t>(a)]
                                   : table.thresholds[static_cast<size_t>(a)];
      sidecar << "attribute=" << data.attribute_names[static_cast<size_t>(a)] << "\n"
              << "probability=" << heat.probability << "\n"
              << "threshold=" << threshold << "\n"
              << "verdict=" << (heat.probability >= threshold ? "positive" : "negative") << "\n"
              << "label=" << static_cast<int>(
                     data.records[static_cast<size_t>(index)].labels[static_cast<size_t>(a)])
              << "\n";
    }
    std::cout << "interpreted sample " << index << " (" << attributes.size()
              << " attribute(s)) into " << out_dir << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attrikit: joint multi-label attribute recognition toolkit"};
  app.require_subcommand(1);

  std::string config_path, manifest_dir, out_path, checkpoint, split = "test";
  std::string method = "f1", table_path, preset = "imbalanced8", format = "ppm";
  std::string samples = "0", attribute = "all";
  int n_train = 2000, n_val = 400, n_test = 400, seeds = 20;
  uint64_t seed = 0;
  double k = 0.1;
  float alpha = 0.45f;

  auto* gen = app.add_subcommand("gen-data", "render a synthetic attribute dataset");
  gen->add_option("--out", out_path, "output dataset directory")->required();
  gen->add_option("--preset", preset, "imbalanced8 | imbalanced8_hard | tall4 | balanced4");
  gen->add_option("--train", n_train, "training sample count");
  gen->add_option("--val", n_val, "validation sample count");
  gen->add_option("--test", n_test, "test sample count");
  gen->add_option("--seed", seed, "generation seed");
  gen->add_option("--format", format, "image format: ppm | png");

  auto* train = app.add_subcommand("train", "train a model on a dataset directory");
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--manifest", manifest_dir, "dataset directory")->required();
  train->add_option("--out", out_path, "run output directory")->required();
  std::string epochs_override, seed_override, weighting_override;
  train->add_option("--epochs", epochs_override, "override train.epochs");
  train->add_option("--seed", seed_override, "override train.seed");
  train->add_option("--weighting", weighting_override, "override train.weighting");

  auto* calibrate = app.add_subcommand("calibrate", "compute per-attribute thresholds");
  calibrate->add_option("--config", config_path, "key=value config file");
  calibrate->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  calibrate->add_option("--manifest", manifest_dir, "dataset directory")->required();
  calibrate->add_option("--method", method, "f1 | pr | fpr | naive");
  calibrate->add_option("--k", k, "FPR budget for --method fpr");
  calibrate->add_option("--out", out_path, "calibration table path")->required();

  auto* evaluate = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  evaluate->add_option("--config", config_path, "key=value config file");
  evaluate->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  evaluate->add_option("--manifest", manifest_dir, "dataset directory")->required();
  evaluate->add_option("--split", split, "train | val | test");
  evaluate->add_option("--calibration", table_path, "calibration table (default naive 0.5)");
  evaluate->add_option("--out", out_path, "also write the report here");

  auto* interpret = app.add_subcommand("interpret", "GradCAM overlays for samples");
  interpret->add_option("--config", config_path, "key=value config file");
  interpret->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  interpret->add_option("--manifest", manifest_dir, "dataset directory")->required();
  interpret->add_option("--split", split, "train | val | test");
  interpret->add_option("--samples", samples, "comma-separated sample indices");
  interpret->add_option("--attribute", attribute, "attribute name, index, or 'all'");
  interpret->add_option("--calibration", table_path, "calibration table for verdicts");
  interpret->add_option("--out", out_path, "output directory")->required();
  interpret->add_option("--alpha", alpha, "overlay blend strength in [0,1]");
  interpret->add_option("--format", format, "overlay format: ppm | png");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gradcheck->add_option("--seeds", seeds, "random seeds per primitive");

  try {
    app.parse(argc, argv);
    ak::KeyValueConfig cfg = load_config_or_empty(config_path);
    if (gen->parsed()) return run_gen_data(out_path, preset, n_train, n_val, n_test, seed, format);
    if (train->parsed()) {
      if (!epochs_override.empty()) cfg.set("train.epochs", epochs_override);
      if (!seed_override.empty()) cfg.set("train.seed", seed_override);
      if (!weighting_override.empty()) cfg.set("train.weighting", weighting_override);
      return run_train(manifest_dir, out_path, cfg);
    }
    if (calibrate->parsed()) return run_calibrate(checkpoint, manifest_dir, method, k, out_path, cfg);
    if (evaluate->parsed())
      return run_eval(checkpoint, manifest_dir, split, table_path, out_path, cfg);
    if (interpret->parsed())
      return run_interpret(checkpoint, manifest_dir, split, samples, attribute, table_path,
                           out_path, alpha, format, cfg);
    if (gradcheck->parsed()) {
      const bool ok = ak::run_gradcheck_suite(std::cout, seeds);
      return ok ? 0 : 3;
    }
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ak::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ak::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const ak::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ak::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
