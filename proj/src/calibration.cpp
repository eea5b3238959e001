// SPDX-License-Identifier: Apache-2.0
#include "attrikit/calibration.hpp"

#include "attrikit/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace attrikit {

RocCurve roc_curve(const std::vector<float>& scores, const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw ShapeError("roc_curve needs matching nonempty scores and labels");
  RocCurve curve;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw DataError("roc_curve labels must be 0/1");
    if (!(scores[i] > 0.0f && scores[i] < 1.0f))
      throw DataError("roc_curve scores must be probabilities in (0,1)");
    if (labels[i])
      ++curve.positives;
    else
      ++curve.negatives;
  }
  if (curve.positives == 0 || curve.negatives == 0)
    throw DataError("roc_curve needs both classes (calibration degenerate)");

  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&scores](size_t a, size_t b) { return scores[a] > scores[b]; });

  // Walk scores descending; each unique value becomes one threshold with
  // cumulative counts for the >= predicate.
  int64_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const float value = scores[order[i]];
    size_t j = i;
    while (j < order.size() && scores[order[j]] == value) {
      if (labels[order[j]])
        ++tp;
      else
        ++fp;
      ++j;
    }
    curve.thresholds.push_back(static_cast<double>(value));
    curve.tp.push_back(tp);
    curve.fp.push_back(fp);
    i = j;
  }
  std::reverse(curve.thresholds.begin(), curve.thresholds.end());
  std::reverse(curve.tp.begin(), curve.tp.end());
  std::reverse(curve.fp.begin(), curve.fp.end());
  return curve;
}

double RocCurve::auc() const {
  // Points from (1,1) down to (0,0) as the threshold rises.
  double area = 0.0;
  double prev_fpr = 1.0, prev_tpr = 1.0;
  for (size_t i = 0; i < point_count(); ++i) {
    area += (prev_fpr - fpr(i)) * 0.5 * (prev_tpr + tpr(i));
    prev_fpr = fpr(i);
    prev_tpr = tpr(i);
  }
  area += prev_fpr * 0.5 * prev_tpr;  // close at (0,0)
  return area;
}

std::vector<ThresholdCandidate> threshold_candidates(const RocCurve& curve) {
  const size_t k = curve.point_count();
  std::vector<ThresholdCandidate> candidates;
  candidates.reserve(k + 1);
  for (size_t j = 0; j < k; ++j) {
    const double t = j == 0 ? curve.thresholds[0]
                            : 0.5 * (curve.thresholds[j - 1] + curve.thresholds[j]);
    candidates.push_back({t, curve.tp[j], curve.fp[j]});
  }
  candidates.push_back({0.5 * (curve.thresholds[k - 1] + 1.0), 0, 0});
  return candidates;
}

namespace {

// Shared tie rules: smaller objective wins, then distance to 0.5, then the
// smaller threshold.
template <typename Objective>
double pick_candidate(const std::vector<ThresholdCandidate>& candidates, Objective objective,
                      const std::function<bool(const ThresholdCandidate&)>& eligible) {
  bool found = false;
  double best_obj = 0.0, best_threshold = 0.0;
  for (const auto& c : candidates) {
    if (!eligible(c)) continue;
    const double obj = objective(c);
    bool better = false;
    if (!found) {
      better = true;
    } else if (obj != best_obj) {
      better = obj < best_obj;
    } else {
      const double d_new = std::abs(c.threshold - 0.5);
      const double d_best = std::abs(best_threshold - 0.5);
      if (d_new != d_best)
        better = d_new < d_best;
      else
        better = c.threshold < best_threshold;
    }
    if (better) {
      found = true;
      best_obj = obj;
      best_threshold = c.threshold;
    }
  }
  if (!found) throw DataError("no eligible calibration candidate");
  return best_threshold;
}

}  // namespace

double f1_calibrate(const RocCurve& curve) {
  const double p = static_cast<double>(curve.positives);
  const double nn = static_cast<double>(curve.negatives);
  auto candidates = threshold_candidates(curve);
  // |TPR - (1-FPR)| scaled by P*Nneg stays integral: |tp*Nneg + fp*P - P*Nneg|.
  return pick_candidate(
      candidates,
      [&](const ThresholdCandidate& c) {
        return std::abs(static_cast<double>(c.tp) * nn + static_cast<double>(c.fp) * p - p * nn);
      },
      [](const ThresholdCandidate&) { return true; });
}

double pr_breakeven_calibrate(const RocCurve& curve) {
  const double p = static_cast<double>(curve.positives);
  auto candidates = threshold_candidates(curve);
  return pick_candidate(
      candidates,
      [&](const ThresholdCandidate& c) {
        const double prec = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        const double rec = static_cast<double>(c.tp) / p;
        return std::abs(prec - rec);
      },
      [](const ThresholdCandidate& c) { return c.tp + c.fp > 0; });
}

double fpr_calibrate(const RocCurve& curve, double k) {
  if (k < 0.0 || k > 1.0) throw DataError("FPR budget must lie in [0,1]");
  const double nn = static_cast<double>(curve.negatives);
  for (const auto& c : threshold_candidates(curve)) {
    if (static_cast<double>(c.fp) / nn <= k) return c.threshold;
  }
  throw DataError("no candidate satisfies the FPR budget");  // unreachable: last has fp=0
}

std::string calib_method_name(CalibMethod m) {
  switch (m) {
    case CalibMethod::Naive: return "naive";
    case CalibMethod::F1: return "f1";
    case CalibMethod::PrBreakEven: return "pr";
    case CalibMethod::FprAtK: return "fpr";
  }
  return "naive";
}

CalibMethod calib_method_from_name(const std::string& name) {
  if (name == "naive") return CalibMethod::Naive;
  if (name == "f1") return CalibMethod::F1;
  if (name == "pr") return CalibMethod::PrBreakEven;
  if (name == "fpr") return CalibMethod::FprAtK;
  throw DataError("unknown calibration method: " + name);
}

CalibrationTable CalibrationTable::naive(const std::vector<std::string>& names,
                                         const std::string& provenance) {
  CalibrationTable t;
  t.attribute_names = names;
  t.thresholds.assign(names.size(), 0.5);
  t.methods.assign(names.size(), "naive");
  t.provenance = provenance;
  return t;
}

void CalibrationTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write calibration table: " + path);
  out << "# split=" << provenance << "\n";
  char buf[96];
  for (size_t m = 0; m < thresholds.size(); ++m) {
    std::snprintf(buf, sizeof(buf), "%.17g", thresholds[m]);
    out << attribute_names[m] << "\t" << buf << "\t" << methods[m] << "\n";
  }
}

CalibrationTable CalibrationTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open calibration table: " + path);
  CalibrationTable t;
  std::string line;
  while (std::getline(in, line)) {
    const std::string s = trim_string(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      const size_t eq = s.find("split=");
      if (eq != std::string::npos) t.provenance = trim_string(s.substr(eq + 6));
      continue;
    }
    auto parts = split_string(s, '\t');
    if (parts.size() != 3)
      throw FormatError("calibration table line is not name<TAB>threshold<TAB>method: " + s);
    t.attribute_names.push_back(parts[0]);
    t.thresholds.push_back(std::stod(parts[1]));
    t.methods.push_back(parts[2]);
  }
  if (t.thresholds.empty()) throw FormatError("calibration table is empty: " + path);
  return t;
}

CalibrationTable calibrate_table(const ScoreMatrix& scores, const BinaryMatrix& labels,
                                 const std::vector<std::string>& attribute_names,
                                 CalibMethod method, double k, const std::string& provenance,
                                 std::ostream* warn) {
  if (scores.rows != labels.rows || scores.cols != labels.cols)
    throw ShapeError("score and label matrices differ in shape");
  if (static_cast<size_t>(scores.cols) != attribute_names.size())
    throw ShapeError("attribute name count does not match matrix width");
  CalibrationTable table;
  table.attribute_names = attribute_names;
  table.provenance = provenance;
  for (int m = 0; m < scores.cols; ++m) {
    if (method == CalibMethod::Naive) {
      table.thresholds.push_back(0.5);
      table.methods.push_back("naive");
      continue;
    }
    std::vector<float> s(static_cast<size_t>(scores.rows));
    std::vector<uint8_t> y(static_cast<size_t>(scores.rows));
    for (int i = 0; i < scores.rows; ++i) {
      s[static_cast<size_t>(i)] = scores.at(i, m);
      y[static_cast<size_t>(i)] = labels.at(i, m);
    }
    try {
      const RocCurve curve = roc_curve(s, y);
      double t = 0.5;
      switch (method) {
        case CalibMethod::F1: t = f1_calibrate(curve); break;
        case CalibMethod::PrBreakEven: t = pr_breakeven_calibrate(curve); break;
        case CalibMethod::FprAtK: t = fpr_calibrate(curve, k); break;
        case CalibMethod::Naive: break;
      }
      table.thresholds.push_back(t);
      table.methods.push_back(calib_method_name(method));
    } catch (const DataError& e) {
      if (warn)
        *warn << "warning: attribute '" << attribute_names[static_cast<size_t>(m)]
              << "' is single-class in the calibration split; falling back to 0.5 ("
              << e.what() << ")\n";
      table.thresholds.push_back(0.5);
      table.methods.push_back("naive");
    }
  }
  return table;
}

BinaryMatrix apply_thresholds(const ScoreMatrix& probabilities, const CalibrationTable& table) {
  if (probabilities.cols != table.attribute_count())
    throw ShapeError("calibration table covers " + std::to_string(table.attribute_count()) +
                     " attributes, scores have " + std::to_string(probabilities.cols));
  for (float v : probabilities.values)
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("probabilities must lie in [0,1]");
  BinaryMatrix out(probabilities.rows, probabilities.cols);
  for (int i = 0; i < probabilities.rows; ++i)
    for (int j = 0; j < probabilities.cols; ++j)
      out.at(i, j) =
          probabilities.at(i, j) >= table.thresholds[static_cast<size_t>(j)] ? 1 : 0;
  return out;
}

}  // namespace attrikit
