// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "attrikit/gradcheck.hpp"
#include "attrikit/loss.hpp"
#include "attrikit/network.hpp"

using namespace attrikit;

TEST_CASE("every primitive and the tiny network match finite differences") {
  std::ostringstream log;
  const bool ok = run_gradcheck_suite(log, 21);
  INFO(log.str());
  CHECK(ok);
}

TEST_CASE("weighted_bce gradient equals the analytic w*(p-y)/N form") {
  Rng rng(99);
  const int n = 6, m = 4;
  auto logits = Tensor::zeros({n, m}, true);
  for (auto& v : logits->data) v = rng.uniform_float(-2.0f, 2.0f);
  auto labels = Tensor::zeros({n, m});
  std::vector<uint8_t> raw(static_cast<size_t>(n) * m);
  for (size_t i = 0; i < raw.size(); ++i) {
    raw[i] = rng.bernoulli(0.5) ? 1 : 0;
    labels->data[i] = raw[i];
  }
  raw[0] = 1;
  labels->data[0] = 1;
  raw[m] = 0;
  labels->data[m] = 0;
  AttributeWeights w = compute_sample_weights(raw, n, m, 1.0);

  Tape tape;
  auto per_attr = weighted_bce(tape, logits, labels, &w);
  auto loss = total_loss(tape, per_attr, std::vector<double>(m, 1.0));
  tape.backward(loss);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const size_t idx = static_cast<size_t>(i) * m + j;
      const double x = logits->data[idx];
      const double p = 1.0 / (1.0 + std::exp(-x));
      const double y = labels->data[idx];
      const double ww = y == 1.0 ? w.positive_weight[static_cast<size_t>(j)]
                                 : w.negative_weight[static_cast<size_t>(j)];
      const double analytic = ww * (p - y) / n;
      CHECK(logits->grad[idx] == doctest::Approx(analytic).epsilon(1e-3));
    }
}
