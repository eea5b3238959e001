// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "attrikit/metrics.hpp"

using namespace attrikit;

namespace {

// Brute-force references, written as plain loops over the definitions.
double brute_mean_accuracy(const BinaryMatrix& y, const BinaryMatrix& p) {
  double sum = 0.0;
  int used = 0;
  for (int j = 0; j < y.cols; ++j) {
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (int i = 0; i < y.rows; ++i) {
      if (y.at(i, j) && p.at(i, j)) ++tp;
      if (!y.at(i, j) && p.at(i, j)) ++fp;
      if (!y.at(i, j) && !p.at(i, j)) ++tn;
      if (y.at(i, j) && !p.at(i, j)) ++fn;
    }
    if (tp + fn == 0 || tn + fp == 0) continue;
    sum += 0.5 * (static_cast<double>(tp) / (tp + fn) + static_cast<double>(tn) / (tn + fp));
    ++used;
  }
  return sum / used;
}

ExampleMetrics brute_example(const BinaryMatrix& y, const BinaryMatrix& p) {
  double acc = 0, prec = 0, rec = 0;
  for (int i = 0; i < y.rows; ++i) {
    int inter = 0, ny = 0, np = 0;
    for (int j = 0; j < y.cols; ++j) {
      if (y.at(i, j) && p.at(i, j)) ++inter;
      ny += y.at(i, j);
      np += p.at(i, j);
    }
    const int uni = ny + np - inter;
    acc += uni ? static_cast<double>(inter) / uni : 1.0;
    prec += np ? static_cast<double>(inter) / np : (ny == 0 ? 1.0 : 0.0);
    rec += ny ? static_cast<double>(inter) / ny : (np == 0 ? 1.0 : 0.0);
  }
  ExampleMetrics m;
  m.accuracy = acc / y.rows;
  m.precision = prec / y.rows;
  m.recall = rec / y.rows;
  m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall)
                                      : 0.0;
  return m;
}

// Exhaustive pair comparison with half-credit ties.
double brute_micro_auc(const ScoreMatrix& s, const BinaryMatrix& y) {
  double wins = 0.0;
  int64_t pairs = 0;
  for (size_t i = 0; i < y.values.size(); ++i) {
    if (!y.values[i]) continue;
    for (size_t j = 0; j < y.values.size(); ++j) {
      if (y.values[j]) continue;
      ++pairs;
      if (s.values[i] > s.values[j])
        wins += 1.0;
      else if (s.values[i] == s.values[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

double brute_subset(const BinaryMatrix& y, const BinaryMatrix& p) {
  int hits = 0;
  for (int i = 0; i < y.rows; ++i) {
    bool all = true;
    for (int j = 0; j < y.cols; ++j) all = all && (y.at(i, j) == p.at(i, j));
    hits += all;
  }
  return static_cast<double>(hits) / y.rows;
}

void randomize(BinaryMatrix& m, Rng& rng, double p) {
  for (auto& v : m.values) v = rng.bernoulli(p) ? 1 : 0;
}

}  // namespace

TEST_CASE("perfect predictions score 1 everywhere") {
  Rng rng(1);
  BinaryMatrix y(6, 4);
  randomize(y, rng, 0.5);
  y.at(0, 0) = 1;
  y.at(1, 0) = 0;  // keep every column two-class
  for (int j = 0; j < 4; ++j) {
    y.at(0, j) = 1;
    y.at(1, j) = 0;
  }
  const auto counts = confusion_counts(y, y);
  CHECK(mean_accuracy(counts) == doctest::Approx(1.0));
  const auto ex = example_based(y, y);
  CHECK(ex.accuracy == doctest::Approx(1.0));
  CHECK(ex.f1 == doctest::Approx(1.0));
  CHECK(subset_accuracy(y, y) == doctest::Approx(1.0));
}

TEST_CASE("the always-positive predictor has mA exactly one half") {
  Rng rng(2);
  BinaryMatrix y(20, 3);
  randomize(y, rng, 0.4);
  for (int j = 0; j < 3; ++j) {
    y.at(0, j) = 1;
    y.at(1, j) = 0;
  }
  BinaryMatrix p(20, 3);
  std::fill(p.values.begin(), p.values.end(), 1);
  CHECK(mean_accuracy(confusion_counts(y, p)) == 0.5);
}

TEST_CASE("mean accuracy matches the hand-computed 5x3 case") {
  BinaryMatrix y(5, 3), p(5, 3);
  y.values = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  p.values = {1, 0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
  // attr0: P=3 (rows 0,2,4 -> tp on 0,2... row4 pred 0) tp=2, tn: rows 1,3 preds 0,0 -> 2
  // attr1: P=2 (rows 1,3) tp=2... row1 pred 1? p.at(1,1)=1 yes, row3 p.at(3,1)=0 -> tp=1; tn rows 0,2,4: preds 0,1,0 -> 2
  // attr2: P=3 (rows 0,2,4): preds 0,1,1 -> tp=2; tn rows 1,3: preds 1,0 -> 1
  const double expected =
      ((2.0 / 3 + 2.0 / 2) / 2 + (1.0 / 2 + 2.0 / 3) / 2 + (2.0 / 3 + 1.0 / 2) / 2) / 3;
  CHECK(mean_accuracy(confusion_counts(y, p)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("degenerate attributes are skipped; all-degenerate throws") {
  BinaryMatrix y(4, 2), p(4, 2);
  for (int i = 0; i < 4; ++i) {
    y.at(i, 0) = 1;            // attr0 single-class
    y.at(i, 1) = i % 2;        // attr1 fine
    p.at(i, 0) = 1;
    p.at(i, 1) = i % 2;
  }
  std::vector<int> skipped;
  CHECK(mean_accuracy(confusion_counts(y, p), &skipped) == doctest::Approx(1.0));
  CHECK(skipped == std::vector<int>{0});

  BinaryMatrix all_pos(4, 1), pred(4, 1);
  std::fill(all_pos.values.begin(), all_pos.values.end(), 1);
  CHECK_THROWS_AS(mean_accuracy(confusion_counts(all_pos, pred)), DataError);
}

TEST_CASE("example-based metrics match the worked 2x3 case") {
  BinaryMatrix y(2, 3), p(2, 3);
  y.values = {1, 0, 1, 0, 1, 1};
  p.values = {1, 0, 0, 0, 1, 1};
  const auto ex = example_based(y, p);
  CHECK(ex.accuracy == doctest::Approx(0.75));
  CHECK(ex.recall == doctest::Approx(0.75));
  CHECK(ex.precision == doctest::Approx(1.0));
  CHECK(ex.f1 == doctest::Approx(2.0 * 1.0 * 0.75 / 1.75));
}

TEST_CASE("disjoint label and prediction sets score zero") {
  BinaryMatrix y(2, 2), p(2, 2);
  y.values = {1, 0, 0, 1};
  p.values = {0, 1, 1, 0};
  const auto ex = example_based(y, p);
  CHECK(ex.accuracy == 0.0);
  CHECK(ex.precision == 0.0);
  CHECK(ex.recall == 0.0);
  CHECK(ex.f1 == 0.0);
}

TEST_CASE("empty label and prediction rows contribute 1") {
  BinaryMatrix y(2, 2), p(2, 2);
  y.values = {0, 0, 1, 1};
  p.values = {0, 0, 1, 1};
  const auto ex = example_based(y, p);
  CHECK(ex.accuracy == doctest::Approx(1.0));
  CHECK(ex.precision == doctest::Approx(1.0));
}

TEST_CASE("perfectly ranked scores give micro AUC of 1") {
  ScoreMatrix s(3, 2);
  BinaryMatrix y(3, 2);
  s.values = {0.9f, 0.8f, 0.7f, 0.2f, 0.1f, 0.05f};
  y.values = {1, 1, 1, 0, 0, 0};
  CHECK(micro_auc(s, y) == doctest::Approx(1.0));
}

TEST_CASE("label-independent scores give micro AUC near one half") {
  Rng rng(3);
  ScoreMatrix s(100, 20);
  BinaryMatrix y(100, 20);
  for (auto& v : s.values) v = rng.uniform_float(0.01f, 0.99f);
  randomize(y, rng, 0.5);
  y.values[0] = 1;
  y.values[1] = 0;
  CHECK(std::abs(micro_auc(s, y) - 0.5) < 0.05);
}

TEST_CASE("four-pair micro AUC equals the exhaustive pair count") {
  ScoreMatrix s(2, 2);
  BinaryMatrix y(2, 2);
  s.values = {0.8f, 0.3f, 0.3f, 0.6f};
  y.values = {1, 0, 0, 1};
  CHECK(micro_auc(s, y) == doctest::Approx(brute_micro_auc(s, y)).epsilon(1e-12));
}

TEST_CASE("micro AUC requires both classes and is transform invariant") {
  ScoreMatrix s(2, 1);
  s.values = {0.3f, 0.6f};
  BinaryMatrix y(2, 1);
  y.values = {1, 1};
  CHECK_THROWS_AS(micro_auc(s, y), DataError);

  Rng rng(9);
  ScoreMatrix scores(30, 3);
  BinaryMatrix labels(30, 3);
  for (auto& v : scores.values) v = rng.uniform_float(0.01f, 0.99f);
  randomize(labels, rng, 0.4);
  labels.values[0] = 1;
  labels.values[1] = 0;
  ScoreMatrix warped = scores;
  for (auto& v : warped.values) v = 1.0f / (1.0f + std::exp(-5.0f * v));  // strictly increasing
  CHECK(micro_auc(scores, labels) == doctest::Approx(micro_auc(warped, labels)).epsilon(1e-12));
}

TEST_CASE("subset accuracy counts exact-match rows") {
  BinaryMatrix y(2, 3), p(2, 3);
  y.values = {1, 0, 1, 0, 1, 1};
  p.values = {1, 0, 1, 0, 1, 0};  // second row one bit off
  CHECK(subset_accuracy(y, y) == 1.0);
  CHECK(subset_accuracy(y, p) == 0.5);
}

TEST_CASE("all metrics match brute force on random matrices") {
  Rng rng(2025);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + rng.uniform_int(0, 48);
    const int m = 1 + rng.uniform_int(0, 9);
    BinaryMatrix y(n, m), p(n, m);
    randomize(y, rng, rng.uniform(0.2, 0.8));
    randomize(p, rng, rng.uniform(0.2, 0.8));
    ScoreMatrix s(n, m);
    for (auto& v : s.values) v = rng.uniform_float(0.01f, 0.99f);

    const auto ex = example_based(y, p);
    const auto ref = brute_example(y, p);
    CHECK(std::abs(ex.accuracy - ref.accuracy) < 1e-9);
    CHECK(std::abs(ex.precision - ref.precision) < 1e-9);
    CHECK(std::abs(ex.recall - ref.recall) < 1e-9);
    CHECK(std::abs(ex.f1 - ref.f1) < 1e-9);
    CHECK(std::abs(subset_accuracy(y, p) - brute_subset(y, p)) < 1e-9);

    bool has_both = false, all_degenerate = true;
    for (int j = 0; j < m; ++j) {
      int64_t pos = 0;
      for (int i = 0; i < n; ++i) pos += y.at(i, j);
      if (pos > 0 && pos < n) all_degenerate = false;
    }
    int64_t total_pos = 0;
    for (uint8_t v : y.values) total_pos += v;
    has_both = total_pos > 0 && total_pos < static_cast<int64_t>(y.values.size());
    if (!all_degenerate)
      CHECK(std::abs(mean_accuracy(confusion_counts(y, p)) - brute_mean_accuracy(y, p)) < 1e-9);
    if (has_both) CHECK(std::abs(micro_auc(s, y) - brute_micro_auc(s, y)) < 1e-9);
  }
}

TEST_CASE("metric values always land in [0,1]") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryMatrix y(10, 4), p(10, 4);
    randomize(y, rng, 0.5);
    randomize(p, rng, 0.5);
    const auto ex = example_based(y, p);
    for (double v : {ex.accuracy, ex.precision, ex.recall, ex.f1, subset_accuracy(y, p)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}
