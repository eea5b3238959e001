// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attrikit/common.hpp"

namespace attrikit {

/// Row-major N x M matrix of 0/1 values.
struct BinaryMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> values;

  BinaryMatrix() = default;
  BinaryMatrix(int r, int c) : rows(r), cols(c), values(static_cast<size_t>(r) * c, 0) {}
  uint8_t& at(int i, int j) { return values[static_cast<size_t>(i) * cols + j]; }
  uint8_t at(int i, int j) const { return values[static_cast<size_t>(i) * cols + j]; }
};

/// Row-major N x M matrix of scores/probabilities.
struct ScoreMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> values;

  ScoreMatrix() = default;
  ScoreMatrix(int r, int c) : rows(r), cols(c), values(static_cast<size_t>(r) * c, 0.0f) {}
  float& at(int i, int j) { return values[static_cast<size_t>(i) * cols + j]; }
  float at(int i, int j) const { return values[static_cast<size_t>(i) * cols + j]; }
};

struct ConfusionCounts {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  int64_t positives() const { return tp + fn; }
  int64_t negatives() const { return tn + fp; }
  int64_t total() const { return tp + fp + tn + fn; }
};

/// Per-attribute confusion counts from matching binary matrices.
std::vector<ConfusionCounts> confusion_counts(const BinaryMatrix& labels,
                                              const BinaryMatrix& predictions);

/// Label-based mean accuracy: mA = (1/M) sum_m (TPR_m + TNR_m) / 2.
/// Attributes with no positives or no negatives are skipped (their indices
/// reported via `skipped` when given); throws if every attribute is
/// degenerate.
double mean_accuracy(const std::vector<ConfusionCounts>& counts,
                     std::vector<int>* skipped = nullptr);

struct ExampleMetrics {
  double accuracy = 0.0;   // mean Jaccard |Y ∩ Yhat| / |Y ∪ Yhat|
  double precision = 0.0;  // mean |Y ∩ Yhat| / |Yhat|
  double recall = 0.0;     // mean |Y ∩ Yhat| / |Y|
  double f1 = 0.0;         // harmonic mean of the two means
};

/// Example-based multi-label metrics. Empty-set convention: a sample with an
/// empty denominator set contributes 1 when both label and prediction sets
/// are empty, 0 otherwise.
ExampleMetrics example_based(const BinaryMatrix& labels, const BinaryMatrix& predictions);

/// Micro-averaged ROC AUC over all N*M (score, label) pairs pooled together
/// (Mann-Whitney statistic, ties counted half).
double micro_auc(const ScoreMatrix& scores, const BinaryMatrix& labels);

/// Fraction of samples whose whole attribute vector matches exactly.
double subset_accuracy(const BinaryMatrix& labels, const BinaryMatrix& predictions);

struct MetricsReport {
  double mean_acc = 0.0;
  double example_accuracy = 0.0;
  double example_precision = 0.0;
  double example_recall = 0.0;
  double example_f1 = 0.0;
  double micro_auc = 0.0;
  double subset_acc = 0.0;
  std::vector<std::string> attribute_names;
  std::vector<ConfusionCounts> per_attribute;
  std::vector<double> thresholds;  // thresholds used to binarize, if any

  /// Flat key-value block followed by a per-attribute table.
  void write(std::ostream& out) const;
};

MetricsReport compute_report(const ScoreMatrix& scores, const BinaryMatrix& labels,
                             const BinaryMatrix& predictions,
                             const std::vector<std::string>& attribute_names);

}  // namespace attrikit
