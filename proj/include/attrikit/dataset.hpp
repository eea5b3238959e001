// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "attrikit/augment.hpp"
#include "attrikit/image.hpp"
#include "attrikit/metrics.hpp"
#include "attrikit/tensor.hpp"

namespace attrikit {

struct ManifestRecord {
  std::string path;  // relative to the dataset root
  std::vector<uint8_t> labels;
};

/// One loaded dataset split: attribute names, labeled records, the split
/// tag, and the dataset's per-channel mean pixel.
struct DatasetManifest {
  std::string root_dir;
  std::string split_tag;  // "train" | "val" | "test" | "all"
  std::vector<std::string> attribute_names;
  std::vector<ManifestRecord> records;
  std::array<float, 3> mean_pixel = {0.0f, 0.0f, 0.0f};

  int attribute_count() const { return static_cast<int>(attribute_names.size()); }
  int sample_count() const { return static_cast<int>(records.size()); }
  std::string resolve(const ManifestRecord& r) const { return root_dir + "/" + r.path; }
  BinaryMatrix label_matrix() const;
  void validate(bool check_paths) const;
};

/// CSV with header "path,<attr1>,...,<attrM>", one record per line.
void save_manifest_csv(const std::vector<std::string>& attribute_names,
                       const std::vector<ManifestRecord>& records, const std::string& path);
std::pair<std::vector<std::string>, std::vector<ManifestRecord>> load_manifest_csv(
    const std::string& path);

/// Sidecar key-value file with mean_r/mean_g/mean_b.
void save_mean_pixel(const std::array<float, 3>& mean, const std::string& path);
std::array<float, 3> load_mean_pixel(const std::string& path);

/// Writes <split>.txt path lists for sequential train/val/test slices.
void write_split_files(const std::string& dataset_dir,
                       const std::vector<ManifestRecord>& records, int n_train, int n_val,
                       int n_test);

/// Loads one split of a dataset directory (manifest.csv + <split>.txt +
/// mean.txt). split may be "train", "val", "test", or "all".
DatasetManifest load_split(const std::string& dataset_dir, const std::string& split);

/// Throws unless the split path lists are pairwise disjoint.
void check_split_disjointness(const std::string& dataset_dir);

/// Decoded-image cache keyed by record index.
class ImageCache {
 public:
  explicit ImageCache(const DatasetManifest& manifest) : manifest_(&manifest) {
    images_.resize(manifest.records.size());
  }
  const Image& get(int index);

 private:
  const DatasetManifest* manifest_;
  std::vector<std::optional<Image>> images_;
};

struct Batch {
  TensorPtr images;  // N x 3 x S x S
  TensorPtr labels;  // N x M
};

/// Assembles a rectangular batch. Training mode augments each sample with
/// an rng stream derived from (seed, epoch, record index) and, under the
/// aspect-preserving policy, samples one long side per batch from the size
/// set via `batch_rng` (also the stream for random crop offsets).
Batch make_batch(const DatasetManifest& manifest, ImageCache& cache,
                 const std::vector<int>& indices, const AugmentationConfig& config,
                 bool training, uint64_t seed, int epoch, Rng& batch_rng);

}  // namespace attrikit
