// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "attrikit/calibration.hpp"

using namespace attrikit;

namespace {

// Exhaustive sweep oracle: rebuilds the candidate list from scratch and
// recounts tp/fp for every candidate by scanning all scores, then applies
// the documented tie rules. Shares no curve bookkeeping with the library.
struct SweepCandidate {
  double threshold;
  int64_t tp, fp;
};

std::vector<SweepCandidate> sweep_candidates(const std::vector<float>& scores,
                                             const std::vector<uint8_t>& labels) {
  std::set<float> unique(scores.begin(), scores.end());
  std::vector<double> thresholds;
  std::vector<double> sorted(unique.begin(), unique.end());
  for (size_t j = 0; j < sorted.size(); ++j)
    thresholds.push_back(j == 0 ? sorted[0] : 0.5 * (sorted[j - 1] + sorted[j]));
  thresholds.push_back(0.5 * (sorted.back() + 1.0));
  std::vector<SweepCandidate> out;
  for (double t : thresholds) {
    SweepCandidate c{t, 0, 0};
    for (size_t i = 0; i < scores.size(); ++i) {
      if (static_cast<double>(scores[i]) >= t) {
        if (labels[i])
          ++c.tp;
        else
          ++c.fp;
      }
    }
    out.push_back(c);
  }
  return out;
}

double sweep_f1(const std::vector<float>& scores, const std::vector<uint8_t>& labels) {
  int64_t pos = 0;
  for (uint8_t y : labels) pos += y;
  const int64_t neg = static_cast<int64_t>(labels.size()) - pos;
  bool found = false;
  double best_obj = 0, best_t = 0;
  for (const auto& c : sweep_candidates(scores, labels)) {
    const double obj = std::abs(static_cast<double>(c.tp) * neg +
                                static_cast<double>(c.fp) * pos -
                                static_cast<double>(pos) * neg);
    bool better;
    if (!found)
      better = true;
    else if (obj != best_obj)
      better = obj < best_obj;
    else if (std::abs(c.threshold - 0.5) != std::abs(best_t - 0.5))
      better = std::abs(c.threshold - 0.5) < std::abs(best_t - 0.5);
    else
      better = c.threshold < best_t;
    if (better) {
      found = true;
      best_obj = obj;
      best_t = c.threshold;
    }
  }
  return best_t;
}

double sweep_fpr(const std::vector<float>& scores, const std::vector<uint8_t>& labels,
                 double k) {
  int64_t pos = 0;
  for (uint8_t y : labels) pos += y;
  const int64_t neg = static_cast<int64_t>(labels.size()) - pos;
  auto candidates = sweep_candidates(scores, labels);
  std::sort(candidates.begin(), candidates.end(),
            [](const SweepCandidate& a, const SweepCandidate& b) {
              return a.threshold < b.threshold;
            });
  for (const auto& c : candidates)
    if (static_cast<double>(c.fp) / static_cast<double>(neg) <= k) return c.threshold;
  return 1.0;
}

std::pair<std::vector<float>, std::vector<uint8_t>> random_case(Rng& rng) {
  const int n = 2 + rng.uniform_int(0, 198);
  std::vector<float> scores(static_cast<size_t>(n));
  std::vector<uint8_t> labels(static_cast<size_t>(n));
  const bool coarse = rng.bernoulli(0.3);  // force score ties regularly
  for (int i = 0; i < n; ++i) {
    float s = rng.uniform_float(0.001f, 0.999f);
    if (coarse) s = std::round(s * 16.0f) / 16.0f + 0.01f;
    scores[static_cast<size_t>(i)] = std::min(0.999f, std::max(0.001f, s));
    labels[static_cast<size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  labels[0] = 1;
  labels[static_cast<size_t>(n - 1)] = 0;
  return {scores, labels};
}

}  // namespace

TEST_CASE("roc_curve reaches (1,0) on perfectly separated scores") {
  std::vector<float> scores = {0.9f, 0.8f, 0.7f, 0.3f, 0.2f, 0.1f};
  std::vector<uint8_t> labels = {1, 1, 1, 0, 0, 0};
  RocCurve curve = roc_curve(scores, labels);
  bool perfect = false;
  for (size_t i = 0; i < curve.point_count(); ++i)
    if (curve.tpr(i) == 1.0 && curve.fpr(i) == 0.0) perfect = true;
  CHECK(perfect);
  CHECK(curve.auc() == doctest::Approx(1.0));
}

TEST_CASE("roc_curve TPR and FPR are nonincreasing in the threshold") {
  Rng rng(17);
  auto [scores, labels] = random_case(rng);
  RocCurve curve = roc_curve(scores, labels);
  for (size_t i = 1; i < curve.point_count(); ++i) {
    CHECK(curve.tpr(i) <= curve.tpr(i - 1));
    CHECK(curve.fpr(i) <= curve.fpr(i - 1));
  }
  // conceptual endpoints: everything predicted at the lowest threshold
  CHECK(curve.tpr(0) == 1.0);
  CHECK(curve.fpr(0) == 1.0);
}

TEST_CASE("coin-flip scores give a near-diagonal curve, AUC about one half") {
  Rng rng(23);
  const int n = 4000;
  std::vector<float> scores(n);
  std::vector<uint8_t> labels(n);
  for (int i = 0; i < n; ++i) {
    scores[static_cast<size_t>(i)] = rng.uniform_float(0.01f, 0.99f);
    labels[static_cast<size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  RocCurve curve = roc_curve(scores, labels);
  CHECK(curve.auc() == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::abs(curve.auc() - 0.5) < 0.05);
}

TEST_CASE("four-score case matches the hand enumeration") {
  std::vector<float> scores = {0.9f, 0.6f, 0.4f, 0.1f};
  std::vector<uint8_t> labels = {1, 1, 0, 0};
  RocCurve curve = roc_curve(scores, labels);
  REQUIRE(curve.point_count() == 4);
  // thresholds ascending: .1 (2,2), .4 (2,1), .6 (2,0), .9 (1,0)
  CHECK(curve.tp == std::vector<int64_t>{2, 2, 2, 1});
  CHECK(curve.fp == std::vector<int64_t>{2, 1, 0, 0});
  CHECK(curve.positives == 2);
  CHECK(curve.negatives == 2);
}

TEST_CASE("roc_curve requires both classes") {
  std::vector<float> scores = {0.2f, 0.4f};
  CHECK_THROWS_AS(roc_curve(scores, {1, 1}), DataError);
  CHECK_THROWS_AS(roc_curve(scores, {0, 0}), DataError);
}

TEST_CASE("trapezoid AUC equals the Mann-Whitney statistic") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto [scores, labels] = random_case(rng);
    RocCurve curve = roc_curve(scores, labels);
    ScoreMatrix s(static_cast<int>(scores.size()), 1);
    BinaryMatrix y(static_cast<int>(scores.size()), 1);
    s.values = scores;
    y.values = labels;
    CHECK(curve.auc() == doctest::Approx(micro_auc(s, y)).epsilon(1e-12));
  }
}

TEST_CASE("f1_calibrate lands mid-gap on separated scores") {
  std::vector<float> scores = {0.9f, 0.6f, 0.4f, 0.1f};
  std::vector<uint8_t> labels = {1, 1, 0, 0};
  const double t = f1_calibrate(roc_curve(scores, labels));
  CHECK(t == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("symmetric scores around one half calibrate to one half") {
  std::vector<float> scores = {0.1f, 0.3f, 0.45f, 0.55f, 0.7f, 0.9f};
  std::vector<uint8_t> labels = {0, 0, 0, 1, 1, 1};
  CHECK(f1_calibrate(roc_curve(scores, labels))== doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("imbalanced low-scoring attribute calibrates below one half") {
  Rng rng(41);
  const int n = 200;
  std::vector<float> scores(n);
  std::vector<uint8_t> labels(n);
  for (int i = 0; i < n; ++i) {
    const bool pos = i < 4;  // 2% positive
    labels[static_cast<size_t>(i)] = pos ? 1 : 0;
    scores[static_cast<size_t>(i)] =
        pos ? rng.uniform_float(0.15f, 0.45f) : rng.uniform_float(0.01f, 0.2f);
  }
  const double t = f1_calibrate(roc_curve(scores, labels));
  CHECK(t < 0.5);
  CHECK(t == sweep_f1(scores, labels));
}

TEST_CASE("fpr_calibrate honors the budget at the extremes") {
  std::vector<float> scores = {0.9f, 0.6f, 0.4f, 0.1f};
  std::vector<uint8_t> labels = {1, 1, 0, 0};
  RocCurve curve = roc_curve(scores, labels);
  // k=1: everything is allowed, lowest candidate threshold
  CHECK(fpr_calibrate(curve, 1.0) == doctest::Approx(0.1f));
  // k=0 on separated data: just above the max negative score
  const double strict = fpr_calibrate(curve, 0.0);
  CHECK(strict > 0.4);
  CHECK(strict <= 0.6);
}

TEST_CASE("calibration oracle equivalence on random score sets") {
  Rng rng(4242);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto [scores, labels] = random_case(rng);
    RocCurve curve = roc_curve(scores, labels);
    CHECK(f1_calibrate(curve) == sweep_f1(scores, labels));
    const double k = rng.uniform(0.0, 1.0);
    CHECK(fpr_calibrate(curve, k) == sweep_fpr(scores, labels, k));
    ++checked;
  }
  CHECK(checked == 400);
}

TEST_CASE("fpr threshold keeps the recounted FPR within budget") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    auto [scores, labels] = random_case(rng);
    const double k = 0.2;
    const double t = fpr_calibrate(roc_curve(scores, labels), k);
    int64_t fp = 0, neg = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (!labels[i]) {
        ++neg;
        if (static_cast<double>(scores[i]) >= t) ++fp;
      }
    }
    CHECK(static_cast<double>(fp) / static_cast<double>(neg) <= k);
  }
}

TEST_CASE("apply_thresholds at one half reproduces naive thresholding") {
  ScoreMatrix probs(2, 3);
  probs.values = {0.2f, 0.5f, 0.8f, 0.49f, 0.51f, 0.5f};
  CalibrationTable naive = CalibrationTable::naive({"a", "b", "c"}, "train");
  BinaryMatrix preds = apply_thresholds(probs, naive);
  // ties at the threshold go positive
  CHECK(preds.values == std::vector<uint8_t>{0, 1, 1, 0, 1, 1});
}

TEST_CASE("apply_thresholds with a mixed table matches hand enumeration") {
  // tie values chosen exactly representable in float
  ScoreMatrix probs(3, 2);
  probs.values = {0.30f, 0.80f, 0.25f, 0.10f, 0.60f, 0.75f};
  CalibrationTable table;
  table.attribute_names = {"a", "b"};
  table.thresholds = {0.25, 0.75};
  table.methods = {"f1", "f1"};
  table.provenance = "train";
  BinaryMatrix preds = apply_thresholds(probs, table);
  CHECK(preds.values == std::vector<uint8_t>{1, 1, 1, 0, 1, 1});
  ScoreMatrix wrong(3, 3);
  CHECK_THROWS_AS(apply_thresholds(wrong, table), ShapeError);
}

TEST_CASE("decision boundaries survive strictly monotone score transforms") {
  Rng rng(88);
  for (int trial = 0; trial < 30; ++trial) {
    auto [scores, labels] = random_case(rng);
    const double t1 = f1_calibrate(roc_curve(scores, labels));
    std::vector<float> transformed(scores.size());
    for (size_t i = 0; i < scores.size(); ++i)
      transformed[i] = scores[i] * scores[i];  // strictly monotone on (0,1)
    const double t2 = f1_calibrate(roc_curve(transformed, labels));
    for (size_t i = 0; i < scores.size(); ++i) {
      const bool p1 = static_cast<double>(scores[i]) >= t1;
      const bool p2 = static_cast<double>(transformed[i]) >= t2;
      CHECK(p1 == p2);
    }
  }
}

TEST_CASE("single-class attributes fall back to naive with a warning") {
  ScoreMatrix scores(4, 2);
  scores.values = {0.9f, 0.9f, 0.8f, 0.8f, 0.3f, 0.7f, 0.2f, 0.6f};
  BinaryMatrix labels(4, 2);
  labels.values = {1, 1, 1, 0, 1, 0, 1, 1};  // attr0 (column 0) all-positive
  std::ostringstream warn;
  CalibrationTable table =
      calibrate_table(scores, labels, {"stuck", "ok"}, CalibMethod::F1, 0.1, "train", &warn);
  CHECK(table.thresholds[0] == 0.5);
  CHECK(table.methods[0] == "naive");
  CHECK(table.methods[1] == "f1");
  CHECK(warn.str().find("single-class") != std::string::npos);
}

TEST_CASE("calibration tables round-trip through the text format") {
  CalibrationTable table;
  table.attribute_names = {"red_disc", "green_square"};
  table.thresholds = {0.51234567890123, 0.25};
  table.methods = {"f1", "fpr"};
  table.provenance = "train";
  const std::string path = "/tmp/attrikit_test_table.tsv";
  table.save(path);
  CalibrationTable loaded = CalibrationTable::load(path);
  CHECK(loaded.attribute_names == table.attribute_names);
  CHECK(loaded.methods == table.methods);
  CHECK(loaded.provenance == "train");
  CHECK(loaded.thresholds[0] == table.thresholds[0]);
  CHECK(loaded.thresholds[1] == table.thresholds[1]);
}
