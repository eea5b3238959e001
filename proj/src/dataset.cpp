// SPDX-License-Identifier: Apache-2.0
#include "attrikit/dataset.hpp"

#include "attrikit/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace attrikit {

BinaryMatrix DatasetManifest::label_matrix() const {
  BinaryMatrix m(sample_count(), attribute_count());
  for (int i = 0; i < sample_count(); ++i)
    for (int j = 0; j < attribute_count(); ++j)
      m.at(i, j) = records[static_cast<size_t>(i)].labels[static_cast<size_t>(j)];
  return m;
}

void DatasetManifest::validate(bool check_paths) const {
  for (const auto& r : records) {
    if (r.labels.size() != attribute_names.size())
      throw DataError("record '" + r.path + "' has " + std::to_string(r.labels.size()) +
                      " labels, manifest declares " + std::to_string(attribute_names.size()));
    for (uint8_t v : r.labels)
      if (v > 1) throw DataError("record '" + r.path + "' has a non-binary label");
    if (check_paths && !std::filesystem::exists(resolve(r)))
      throw DataError("manifest references a missing image: " + resolve(r));
  }
}

void save_manifest_csv(const std::vector<std::string>& attribute_names,
                       const std::vector<ManifestRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << "path";
  for (const auto& name : attribute_names) out << "," << name;
  out << "\n";
  for (const auto& r : records) {
    out << r.path;
    for (uint8_t v : r.labels) out << "," << static_cast<int>(v);
    out << "\n";
  }
}

std::pair<std::vector<std::string>, std::vector<ManifestRecord>> load_manifest_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("manifest is empty: " + path);
  auto header = split_string(trim_string(line), ',');
  if (header.size() < 2 || header[0] != "path")
    throw FormatError("manifest header must be path,<attr1>,...: " + path);
  std::vector<std::string> names(header.begin() + 1, header.end());
  std::vector<ManifestRecord> records;
  while (std::getline(in, line)) {
    const std::string t = trim_string(line);
    if (t.empty()) continue;
    auto parts = split_string(t, ',');
    if (parts.size() != header.size())
      throw FormatError("manifest row has " + std::to_string(parts.size()) +
                        " fields, expected " + std::to_string(header.size()));
    ManifestRecord r;
    r.path = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) {
      if (parts[i] != "0" && parts[i] != "1")
        throw FormatError("manifest label must be 0 or 1, got: " + parts[i]);
      r.labels.push_back(parts[i] == "1" ? 1 : 0);
    }
    records.push_back(std::move(r));
  }
  return {std::move(names), std::move(records)};
}

void save_mean_pixel(const std::array<float, 3>& mean, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write mean pixel file: " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "mean_r=%.6f\nmean_g=%.6f\nmean_b=%.6f\n", mean[0], mean[1],
                mean[2]);
  out << buf;
}

std::array<float, 3> load_mean_pixel(const std::string& path) {
  KeyValueConfig kv = KeyValueConfig::load_file(path);
  return {static_cast<float>(kv.get_double("mean_r", 0.0)),
          static_cast<float>(kv.get_double("mean_g", 0.0)),
          static_cast<float>(kv.get_double("mean_b", 0.0))};
}

void write_split_files(const std::string& dataset_dir,
                       const std::vector<ManifestRecord>& records, int n_train, int n_val,
                       int n_test) {
  if (n_train + n_val + n_test > static_cast<int>(records.size()))
    throw DataError("split sizes exceed the record count");
  auto write_list = [&](const std::string& name, int begin, int count) {
    std::ofstream out(dataset_dir + "/" + name + ".txt", std::ios::trunc);
    if (!out) throw DataError("cannot write split file: " + name);
    for (int i = begin; i < begin + count; ++i)
      out << records[static_cast<size_t>(i)].path << "\n";
  };
  write_list("train", 0, n_train);
  write_list("val", n_train, n_val);
  write_list("test", n_train + n_val, n_test);
}

namespace {

std::vector<std::string> read_path_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim_string(line);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

DatasetManifest load_split(const std::string& dataset_dir, const std::string& split) {
  auto [names, all_records] = load_manifest_csv(dataset_dir + "/manifest.csv");
  DatasetManifest m;
  m.root_dir = dataset_dir;
  m.split_tag = split;
  m.attribute_names = std::move(names);
  m.mean_pixel = load_mean_pixel(dataset_dir + "/mean.txt");
  if (split == "all") {
    m.records = std::move(all_records);
  } else {
    if (split != "train" && split != "val" && split != "test")
      throw DataError("unknown split: " + split);
    std::map<std::string, const ManifestRecord*> by_path;
    for (const auto& r : all_records) by_path[r.path] = &r;
    for (const auto& p : read_path_list(dataset_dir + "/" + split + ".txt")) {
      auto it = by_path.find(p);
      if (it == by_path.end())
        throw DataError("split file lists a path missing from the manifest: " + p);
      m.records.push_back(*it->second);
    }
  }
  if (m.records.empty()) throw DataError("split '" + split + "' is empty");
  m.validate(true);
  return m;
}

void check_split_disjointness(const std::string& dataset_dir) {
  std::set<std::string> seen;
  for (const char* split : {"train", "val", "test"}) {
    for (const auto& p : read_path_list(dataset_dir + "/" + std::string(split) + ".txt")) {
      if (!seen.insert(p).second)
        throw DataError("path appears in more than one split: " + p);
    }
  }
}

const Image& ImageCache::get(int index) {
  auto& slot = images_[static_cast<size_t>(index)];
  if (!slot)
    slot = read_image(manifest_->resolve(manifest_->records[static_cast<size_t>(index)]));
  return *slot;
}

Batch make_batch(const DatasetManifest& manifest, ImageCache& cache,
                 const std::vector<int>& indices, const AugmentationConfig& config,
                 bool training, uint64_t seed, int epoch, Rng& batch_rng) {
  if (indices.empty()) throw DataError("make_batch needs at least one sample");
  config.validate();
  const int n = static_cast<int>(indices.size());
  const int m = manifest.attribute_count();

  int canvas;
  if (config.policy == ResizePolicy::AspectPreserving) {
    canvas = training
                 ? config.size_set[static_cast<size_t>(
                       batch_rng.uniform_int(0, static_cast<int>(config.size_set.size()) - 1))]
                 : config.eval_canvas();
  } else {
    canvas = config.fixed_crop;
  }

  Batch batch;
  batch.images = Tensor::zeros({n, 3, canvas, canvas});
  batch.labels = Tensor::zeros({n, m});
  for (int bi = 0; bi < n; ++bi) {
    const int idx = indices[static_cast<size_t>(bi)];
    const Image& raw = cache.get(idx);
    Image prepared;
    if (training) {
      Rng aug_rng(derive_seed(seed, static_cast<uint64_t>(epoch) * 0x10001ULL,
                              static_cast<uint64_t>(idx)));
      prepared = augment(raw, config, aug_rng);
    } else {
      prepared = eval_transform(raw, config);
    }
    prepared = apply_resize_policy(prepared, config, canvas, training, batch_rng);

    float* dst = batch.images->data.data() +
                 static_cast<int64_t>(bi) * 3 * canvas * canvas;
    for (int y = 0; y < canvas; ++y)
      for (int x = 0; x < canvas; ++x) {
        const float* px = prepared.pixel(y, x);
        for (int c = 0; c < 3; ++c)
          dst[(static_cast<int64_t>(c) * canvas + y) * canvas + x] = px[c];
      }
    const auto& labels = manifest.records[static_cast<size_t>(idx)].labels;
    for (int j = 0; j < m; ++j)
      batch.labels->data[static_cast<size_t>(bi) * m + j] = labels[static_cast<size_t>(j)];
  }
  return batch;
}

}  // namespace attrikit
