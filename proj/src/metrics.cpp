// SPDX-License-Identifier: Apache-2.0
#include "attrikit/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace attrikit {

namespace {

void check_binary(const BinaryMatrix& m, const char* what) {
  for (uint8_t v : m.values)
    if (v > 1) throw DataError(std::string(what) + " matrix must contain only 0/1");
}

void check_match(const BinaryMatrix& a, const BinaryMatrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw ShapeError("label and prediction matrices differ in shape");
}

}  // namespace

std::vector<ConfusionCounts> confusion_counts(const BinaryMatrix& labels,
                                              const BinaryMatrix& predictions) {
  check_match(labels, predictions);
  check_binary(labels, "label");
  check_binary(predictions, "prediction");
  std::vector<ConfusionCounts> counts(static_cast<size_t>(labels.cols));
  for (int i = 0; i < labels.rows; ++i) {
    for (int j = 0; j < labels.cols; ++j) {
      ConfusionCounts& c = counts[static_cast<size_t>(j)];
      const bool y = labels.at(i, j), p = predictions.at(i, j);
      if (y && p)
        ++c.tp;
      else if (!y && p)
        ++c.fp;
      else if (y && !p)
        ++c.fn;
      else
        ++c.tn;
    }
  }
  return counts;
}

double mean_accuracy(const std::vector<ConfusionCounts>& counts, std::vector<int>* skipped) {
  double total = 0.0;
  int used = 0;
  for (size_t m = 0; m < counts.size(); ++m) {
    const ConfusionCounts& c = counts[m];
    if (c.positives() == 0 || c.negatives() == 0) {
      if (skipped) skipped->push_back(static_cast<int>(m));
      continue;
    }
    const double tpr = static_cast<double>(c.tp) / static_cast<double>(c.positives());
    const double tnr = static_cast<double>(c.tn) / static_cast<double>(c.negatives());
    total += 0.5 * (tpr + tnr);
    ++used;
  }
  if (used == 0) throw DataError("mean_accuracy: every attribute is single-class");
  return total / used;
}

ExampleMetrics example_based(const BinaryMatrix& labels, const BinaryMatrix& predictions) {
  check_match(labels, predictions);
  check_binary(labels, "label");
  check_binary(predictions, "prediction");
  const int n = labels.rows;
  if (n == 0) throw DataError("example_based needs at least one sample");
  double acc = 0.0, prec = 0.0, rec = 0.0;
  for (int i = 0; i < n; ++i) {
    int inter = 0, y_count = 0, p_count = 0;
    for (int j = 0; j < labels.cols; ++j) {
      const bool y = labels.at(i, j), p = predictions.at(i, j);
      inter += (y && p);
      y_count += y;
      p_count += p;
    }
    const int uni = y_count + p_count - inter;
    acc += uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
    prec += p_count == 0 ? (y_count == 0 ? 1.0 : 0.0) : static_cast<double>(inter) / p_count;
    rec += y_count == 0 ? (p_count == 0 ? 1.0 : 0.0) : static_cast<double>(inter) / y_count;
  }
  ExampleMetrics m;
  m.accuracy = acc / n;
  m.precision = prec / n;
  m.recall = rec / n;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

double micro_auc(const ScoreMatrix& scores, const BinaryMatrix& labels) {
  if (scores.rows != labels.rows || scores.cols != labels.cols)
    throw ShapeError("score and label matrices differ in shape");
  check_binary(labels, "label");
  const size_t n = labels.values.size();
  if (n == 0) throw DataError("micro_auc needs at least one pair");

  // Mann-Whitney via midranks: AUC = (R_pos - P(P+1)/2) / (P * Nneg).
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](size_t a, size_t b) {
    return scores.values[a] < scores.values[b];
  });
  int64_t positives = 0;
  for (uint8_t v : labels.values) positives += v;
  const int64_t negatives = static_cast<int64_t>(n) - positives;
  if (positives == 0 || negatives == 0)
    throw DataError("micro_auc needs both classes in the flattened label set");

  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores.values[order[j]] == scores.values[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k)
      if (labels.values[order[k]]) rank_sum_pos += midrank;
    i = j;
  }
  const double p = static_cast<double>(positives);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double subset_accuracy(const BinaryMatrix& labels, const BinaryMatrix& predictions) {
  check_match(labels, predictions);
  if (labels.rows == 0) throw DataError("subset_accuracy needs at least one sample");
  int exact = 0;
  for (int i = 0; i < labels.rows; ++i) {
    bool same = true;
    for (int j = 0; j < labels.cols; ++j)
      if (labels.at(i, j) != predictions.at(i, j)) {
        same = false;
        break;
      }
    exact += same;
  }
  return static_cast<double>(exact) / labels.rows;
}

MetricsReport compute_report(const ScoreMatrix& scores, const BinaryMatrix& labels,
                             const BinaryMatrix& predictions,
                             const std::vector<std::string>& attribute_names) {
  MetricsReport r;
  r.per_attribute = confusion_counts(labels, predictions);
  r.mean_acc = mean_accuracy(r.per_attribute);
  const ExampleMetrics ex = example_based(labels, predictions);
  r.example_accuracy = ex.accuracy;
  r.example_precision = ex.precision;
  r.example_recall = ex.recall;
  r.example_f1 = ex.f1;
  r.micro_auc = micro_auc(scores, labels);
  r.subset_acc = subset_accuracy(labels, predictions);
  r.attribute_names = attribute_names;
  return r;
}

void MetricsReport::write(std::ostream& out) const {
  char buf[160];
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.6f\n", key, v);
    out << buf;
  };
  kv("mA", mean_acc);
  kv("example_accuracy", example_accuracy);
  kv("example_precision", example_precision);
  kv("example_recall", example_recall);
  kv("example_f1", example_f1);
  kv("micro_auc", micro_auc);
  kv("subset_accuracy", subset_acc);
  out << "\n# attribute\ttp\tfp\ttn\tfn\ttpr\ttnr";
  out << (thresholds.empty() ? "\n" : "\tthreshold\n");
  for (size_t m = 0; m < per_attribute.size(); ++m) {
    const ConfusionCounts& c = per_attribute[m];
    const std::string name =
        m < attribute_names.size() ? attribute_names[m] : "attr" + std::to_string(m);
    const double tpr =
        c.positives() ? static_cast<double>(c.tp) / static_cast<double>(c.positives()) : 0.0;
    const double tnr =
        c.negatives() ? static_cast<double>(c.tn) / static_cast<double>(c.negatives()) : 0.0;
    std::snprintf(buf, sizeof(buf), "%s\t%lld\t%lld\t%lld\t%lld\t%.4f\t%.4f", name.c_str(),
                  static_cast<long long>(c.tp), static_cast<long long>(c.fp),
                  static_cast<long long>(c.tn), static_cast<long long>(c.fn), tpr, tnr);
    out << buf;
    if (!thresholds.empty()) {
      std::snprintf(buf, sizeof(buf), "\t%.6f", m < thresholds.size() ? thresholds[m] : 0.5);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace attrikit
