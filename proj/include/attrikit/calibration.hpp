// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attrikit/metrics.hpp"

namespace attrikit {

/// Empirical ROC curve of one attribute over training-set scores.
///
/// thresholds holds the sorted unique scores; tp[i]/fp[i] count samples with
/// score >= thresholds[i] (ties predicted positive). Conceptually the curve
/// also contains (TPR,FPR) = (1,1) below the lowest score and (0,0) above
/// the highest; candidate selection and AUC account for both.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<int64_t> tp;
  std::vector<int64_t> fp;
  int64_t positives = 0;
  int64_t negatives = 0;

  size_t point_count() const { return thresholds.size(); }
  double tpr(size_t i) const { return static_cast<double>(tp[i]) / static_cast<double>(positives); }
  double fpr(size_t i) const { return static_cast<double>(fp[i]) / static_cast<double>(negatives); }

  /// Trapezoidal area under the curve, endpoints included.
  double auc() const;
};

/// Candidate decision thresholds derived from a curve. Each operating point
/// is represented by one threshold that realizes it:
///   - the lowest unique score for the predict-everything point,
///   - the midpoint of two adjacent unique scores in between,
///   - the midpoint of the highest score and 1.0 for the predict-nothing
///     point (scores are probabilities in (0,1)).
struct ThresholdCandidate {
  double threshold;
  int64_t tp;
  int64_t fp;
};
std::vector<ThresholdCandidate> threshold_candidates(const RocCurve& curve);

RocCurve roc_curve(const std::vector<float>& scores, const std::vector<uint8_t>& labels);

/// Equal-error-rate calibration: the candidate minimizing |TPR - (1 - FPR)|.
/// Ties break toward the threshold closest to 0.5, then toward the smaller
/// threshold. The objective is compared in exact integer form
/// |tp*Nneg + fp*P - P*Nneg|.
double f1_calibrate(const RocCurve& curve);

/// Precision/recall break-even variant: minimizes |precision - recall| over
/// candidates that predict at least one positive. Same tie rules.
double pr_breakeven_calibrate(const RocCurve& curve);

/// Smallest candidate threshold whose FPR is within the budget k, i.e. the
/// most permissive operating point (maximal recall) subject to FPR <= k.
double fpr_calibrate(const RocCurve& curve, double k);

enum class CalibMethod { Naive, F1, PrBreakEven, FprAtK };

std::string calib_method_name(CalibMethod m);
CalibMethod calib_method_from_name(const std::string& name);

/// Per-attribute decision thresholds plus how they were produced.
struct CalibrationTable {
  std::vector<std::string> attribute_names;
  std::vector<double> thresholds;
  std::vector<std::string> methods;  // per attribute; fallbacks may differ
  std::string provenance;            // split identifier, e.g. "train"

  int attribute_count() const { return static_cast<int>(thresholds.size()); }

  /// One line per attribute: "name<TAB>threshold<TAB>method". Provenance is
  /// kept in a leading comment line.
  void save(const std::string& path) const;
  static CalibrationTable load(const std::string& path);

  static CalibrationTable naive(const std::vector<std::string>& names,
                                const std::string& provenance);
};

/// Builds a calibration table from per-attribute training scores. Attributes
/// whose training labels are single-class fall back to threshold 0.5 and
/// method "naive" with a warning on `warn`.
CalibrationTable calibrate_table(const ScoreMatrix& scores, const BinaryMatrix& labels,
                                 const std::vector<std::string>& attribute_names,
                                 CalibMethod method, double k, const std::string& provenance,
                                 std::ostream* warn = nullptr);

/// prediction = 1 iff probability >= threshold (documented tie rule).
BinaryMatrix apply_thresholds(const ScoreMatrix& probabilities, const CalibrationTable& table);

}  // namespace attrikit
