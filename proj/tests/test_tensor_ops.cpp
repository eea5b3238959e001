// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "attrikit/optim.hpp"
#include "attrikit/tape.hpp"

using namespace attrikit;

TEST_CASE("conv2d identity kernel leaves input unchanged") {
  Tape tape;
  auto x = Tensor::from({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto k = Tensor::from({1, 1, 1, 1}, {1.0f});
  auto b = Tensor::zeros({1});
  auto y = tape.conv2d(x, k, b, 1, 0);
  REQUIRE(y->dims == x->dims);
  for (size_t i = 0; i < x->data.size(); ++i) CHECK(y->data[i] == x->data[i]);
}

TEST_CASE("conv2d all-ones 3x3 kernel sums the window") {
  Tape tape;
  auto x = Tensor::full({1, 1, 3, 3}, 1.0f);
  auto k = Tensor::full({1, 1, 3, 3}, 1.0f);
  auto b = Tensor::zeros({1});
  auto y = tape.conv2d(x, k, b, 1, 0);
  REQUIRE(y->dims == std::vector<int>{1, 1, 1, 1});
  CHECK(y->data[0] == doctest::Approx(9.0f));
}

TEST_CASE("conv2d output dims follow the floor formula") {
  Tape tape;
  Rng rng(7);
  auto x = Tensor::zeros({2, 3, 8, 8});
  for (auto& v : x->data) v = rng.uniform_float(-1, 1);
  auto k = Tensor::zeros({4, 3, 3, 3});
  for (auto& v : k->data) v = rng.uniform_float(-1, 1);
  auto b = Tensor::zeros({4});
  auto y = tape.conv2d(x, k, b, 2, 1);
  CHECK(y->dims == std::vector<int>{2, 4, 4, 4});
}

TEST_CASE("conv2d rejects channel mismatch with a descriptive error") {
  Tape tape;
  auto x = Tensor::zeros({1, 2, 4, 4});
  auto k = Tensor::zeros({1, 3, 3, 3});
  CHECK_THROWS_AS(tape.conv2d(x, k, nullptr, 1, 1), ShapeError);
  CHECK_THROWS_WITH_AS(tape.conv2d(x, k, nullptr, 1, 1),
                       doctest::Contains("channel mismatch"), ShapeError);
}

TEST_CASE("conv2d rejects inputs with no kernel placement") {
  Tape tape;
  auto x = Tensor::zeros({1, 1, 2, 2});
  auto k = Tensor::zeros({1, 1, 3, 3});
  CHECK_THROWS_AS(tape.conv2d(x, k, nullptr, 1, 0), ShapeError);
}

TEST_CASE("batch_norm2d maps constant input to zeros") {
  Tape tape;
  auto x = Tensor::full({2, 3, 4, 4}, 5.0f);
  auto scale = Tensor::full({3}, 1.0f);
  auto shift = Tensor::zeros({3});
  auto rm = Tensor::zeros({3});
  auto rv = Tensor::full({3}, 1.0f);
  auto y = tape.batch_norm2d(x, scale, shift, rm, rv, true);
  for (float v : y->data) CHECK(v == doctest::Approx(0.0f).epsilon(1e-6));
}

TEST_CASE("batch_norm2d train mode normalizes to zero mean unit variance") {
  Tape tape;
  Rng rng(3);
  const int n = 4, c = 2, h = 5, w = 5;
  auto x = Tensor::zeros({n, c, h, w});
  for (auto& v : x->data) v = rng.uniform_float(-2, 3);
  auto scale = Tensor::full({c}, 1.0f);
  auto shift = Tensor::zeros({c});
  auto rm = Tensor::zeros({c});
  auto rv = Tensor::full({c}, 1.0f);
  auto y = tape.batch_norm2d(x, scale, shift, rm, rv, true);
  for (int ch = 0; ch < c; ++ch) {
    double sum = 0.0, sumsq = 0.0;
    for (int ni = 0; ni < n; ++ni)
      for (int i = 0; i < h * w; ++i) {
        const double v = y->data[(static_cast<size_t>(ni) * c + ch) * h * w + i];
        sum += v;
        sumsq += v * v;
      }
    const double m = static_cast<double>(n) * h * w;
    CHECK(sum / m == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(sumsq / m == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batch_norm2d train mode rejects a single spatial-batch element") {
  Tape tape;
  auto x = Tensor::zeros({1, 2, 1, 1});
  auto scale = Tensor::full({2}, 1.0f);
  auto shift = Tensor::zeros({2});
  auto rm = Tensor::zeros({2});
  auto rv = Tensor::full({2}, 1.0f);
  CHECK_THROWS_AS(tape.batch_norm2d(x, scale, shift, rm, rv, true), NumericError);
}

TEST_CASE("batch_norm2d eval mode leaves running stats untouched") {
  Tape tape;
  auto x = Tensor::full({2, 1, 2, 2}, 3.0f);
  auto scale = Tensor::full({1}, 1.0f);
  auto shift = Tensor::zeros({1});
  auto rm = Tensor::full({1}, 0.25f);
  auto rv = Tensor::full({1}, 2.0f);
  tape.batch_norm2d(x, scale, shift, rm, rv, false);
  CHECK(rm->data[0] == 0.25f);
  CHECK(rv->data[0] == 2.0f);
}

TEST_CASE("relu clamps negatives and keeps positives") {
  Tape tape;
  auto x = Tensor::from({3}, {-1.0f, 0.0f, 2.0f});
  auto y = tape.relu(x);
  CHECK(y->data[0] == 0.0f);
  CHECK(y->data[1] == 0.0f);
  CHECK(y->data[2] == 2.0f);
}

TEST_CASE("relu subgradient at exactly zero is zero") {
  Tape tape;
  auto x = Tensor::from({3}, {-1.0f, 0.0f, 2.0f}, true);
  auto y = tape.relu(x);
  auto loss = tape.reduce_sum(y);
  tape.backward(loss);
  CHECK(x->grad[0] == 0.0f);
  CHECK(x->grad[1] == 0.0f);
  CHECK(x->grad[2] == 1.0f);
}

TEST_CASE("residual_add of zeros is the identity and rejects dim mismatch") {
  Tape tape;
  auto x = Tensor::from({2, 2}, {1, 2, 3, 4});
  auto z = Tensor::zeros({2, 2});
  auto y = tape.residual_add(x, z);
  for (size_t i = 0; i < x->data.size(); ++i) CHECK(y->data[i] == x->data[i]);
  auto bad = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(tape.residual_add(x, bad), ShapeError);
}

TEST_CASE("residual_add gradient flows unchanged to both addends") {
  Tape tape;
  auto a = Tensor::from({2}, {1.0f, 2.0f}, true);
  auto b = Tensor::from({2}, {3.0f, 4.0f}, true);
  auto coeffs = Tensor::from({2}, {2.0f, -1.0f});
  auto loss = tape.reduce_sum(tape.multiply(tape.residual_add(a, b), coeffs));
  tape.backward(loss);
  CHECK(a->grad[0] == 2.0f);
  CHECK(a->grad[1] == -1.0f);
  CHECK(b->grad[0] == 2.0f);
  CHECK(b->grad[1] == -1.0f);
}

TEST_CASE("global_average_pool computes spatial means") {
  Tape tape;
  auto constant = Tensor::full({1, 2, 3, 5}, 0.75f);
  auto y = tape.global_average_pool(constant);
  REQUIRE(y->dims == std::vector<int>{1, 2});
  CHECK(y->data[0] == doctest::Approx(0.75f));

  auto x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
  CHECK(tape.global_average_pool(x)->data[0] == doctest::Approx(2.5f));
}

TEST_CASE("global_average_pool backward sums exactly to the incoming gradient") {
  // power-of-two spatial size: the uniform split is exact in float
  Tape tape;
  auto x = Tensor::zeros({1, 1, 4, 4}, true);
  auto y = tape.global_average_pool(x);
  auto coeffs = Tensor::from({1, 1}, {0.3125f});
  auto loss = tape.reduce_sum(tape.multiply(y, coeffs));
  tape.backward(loss);
  float sum = 0.0f;
  for (float g : x->grad) sum += g;
  CHECK(sum == 0.3125f);
}

TEST_CASE("global_average_pool accepts any spatial extent") {
  Tape tape;
  for (int h : {1, 3, 7})
    for (int w : {1, 4}) {
      auto x = Tensor::full({1, 2, h, w}, 1.5f);
      auto y = tape.global_average_pool(x);
      CHECK(y->dims == std::vector<int>{1, 2});
      CHECK(y->data[0] == doctest::Approx(1.5f));
    }
}

TEST_CASE("affine with identity weight and zero bias is the identity") {
  Tape tape;
  auto x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  auto w = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) w->data[static_cast<size_t>(i) * 3 + i] = 1.0f;
  auto b = Tensor::zeros({3});
  auto y = tape.affine(x, w, b);
  for (size_t i = 0; i < x->data.size(); ++i) CHECK(y->data[i] == doctest::Approx(x->data[i]));
}

TEST_CASE("affine with zero weight broadcasts the bias") {
  Tape tape;
  auto x = Tensor::full({3, 4}, 2.0f);
  auto w = Tensor::zeros({4, 2});
  auto b = Tensor::from({2}, {0.5f, -1.5f});
  auto y = tape.affine(x, w, b);
  for (int i = 0; i < 3; ++i) {
    CHECK(y->data[static_cast<size_t>(i) * 2] == 0.5f);
    CHECK(y->data[static_cast<size_t>(i) * 2 + 1] == -1.5f);
  }
  auto bad = Tensor::zeros({5, 2});
  CHECK_THROWS_AS(tape.affine(x, bad, b), ShapeError);
}

TEST_CASE("sigmoid hits the anchor values and stays in (0,1)") {
  Tape tape;
  auto x = Tensor::from({1}, {0.0f});
  CHECK(tape.sigmoid(x)->data[0] == doctest::Approx(0.5f));

  for (float v : {1.0f, 5.0f, 30.0f}) {
    auto pos = Tensor::from({1}, {v});
    auto neg = Tensor::from({1}, {-v});
    const float sp = tape.sigmoid(pos)->data[0];
    const float sn = tape.sigmoid(neg)->data[0];
    CHECK(sn == doctest::Approx(1.0f - sp).epsilon(1e-6));
  }
}

TEST_CASE("sigmoid(-100) underflows gracefully, never to NaN") {
  Tape tape;
  auto x = Tensor::from({3}, {-100.0f, -80.0f, 80.0f});
  auto y = tape.sigmoid(x);
  CHECK(std::isfinite(y->data[0]));
  CHECK(y->data[0] > 0.0f);
  CHECK(y->data[0] <= 1e-40f);
  CHECK(y->data[1] > 0.0f);
  CHECK(y->data[2] < 1.0f);
  CHECK(y->data[2] > 0.99f);
}

TEST_CASE("sigmoid output is always within (0,1) for random finite input") {
  Tape tape;
  Rng rng(11);
  auto x = Tensor::zeros({200});
  for (auto& v : x->data) v = rng.uniform_float(-90.0f, 90.0f);
  auto y = tape.sigmoid(x);
  for (float v : y->data) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
    CHECK(std::isfinite(v));
  }
}

TEST_CASE("backward of sum(x) yields all-ones gradient") {
  Tape tape;
  auto x = Tensor::from({4}, {0.5f, -2.0f, 3.0f, 7.0f}, true);
  auto loss = tape.reduce_sum(x);
  tape.backward(loss);
  for (float g : x->grad) CHECK(g == 1.0f);
}

TEST_CASE("backward of sum(x*x) yields 2x") {
  Tape tape;
  auto x = Tensor::from({3}, {1.0f, -2.0f, 0.5f}, true);
  auto loss = tape.reduce_sum(tape.multiply(x, x));
  tape.backward(loss);
  for (size_t i = 0; i < x->data.size(); ++i)
    CHECK(x->grad[i] == doctest::Approx(2.0f * x->data[i]));
}

TEST_CASE("backward rejects non-scalar losses") {
  Tape tape;
  auto x = Tensor::from({2}, {1.0f, 2.0f}, true);
  auto y = tape.relu(x);
  CHECK_THROWS_AS(tape.backward(y), NumericError);
}

TEST_CASE("repeated backward without reset accumulates leaf gradients") {
  Tape tape;
  auto x = Tensor::from({3}, {1.0f, -2.0f, 0.5f}, true);
  auto loss = tape.reduce_sum(tape.multiply(x, x));
  tape.backward(loss);
  std::vector<float> once = x->grad;
  tape.backward(loss);
  for (size_t i = 0; i < once.size(); ++i) CHECK(x->grad[i] == doctest::Approx(2.0f * once[i]));
}

TEST_CASE("gradients accumulate when a tensor feeds multiple consumers") {
  Tape tape;
  auto x = Tensor::from({2}, {1.0f, 2.0f}, true);
  auto loss = tape.reduce_sum(tape.residual_add(x, x));
  tape.backward(loss);
  CHECK(x->grad[0] == 2.0f);
  CHECK(x->grad[1] == 2.0f);
}

TEST_CASE("sgd with zero momentum reduces to plain SGD") {
  auto p = Tensor::from({2}, {1.0f, -0.5f}, true);
  p->ensure_grad();
  p->grad = {0.2f, -0.4f};
  SgdNesterov opt({p}, 0.1f, 0.0f, 0.0f);
  opt.step();
  CHECK(p->data[0] == doctest::Approx(1.0f - 0.1f * 0.2f));
  CHECK(p->data[1] == doctest::Approx(-0.5f + 0.1f * 0.4f));
}

TEST_CASE("sgd leaves params unchanged for zero gradient and velocity") {
  auto p = Tensor::from({3}, {1.0f, 2.0f, 3.0f}, true);
  p->ensure_grad();
  SgdNesterov opt({p}, 0.1f, 0.9f, 0.0f);
  opt.step();
  CHECK(p->data[0] == 1.0f);
  CHECK(p->data[1] == 2.0f);
  CHECK(p->data[2] == 3.0f);
}

TEST_CASE("sgd nesterov matches the hand-iterated recurrence on f(w)=w^2") {
  // recurrence: g = 2w; v' = mu*v - lr*g; w' = w + mu*v' - lr*g
  const float lr = 0.1f, mu = 0.9f;
  float w_ref = 1.0f, v_ref = 0.0f;
  for (int step = 0; step < 2; ++step) {
    const float g = 2.0f * w_ref;
    v_ref = mu * v_ref - lr * g;
    w_ref = w_ref + mu * v_ref - lr * g;
  }

  auto p = Tensor::from({1}, {1.0f}, true);
  SgdNesterov opt({p}, lr, mu, 0.0f);
  for (int step = 0; step < 2; ++step) {
    p->ensure_grad();
    p->grad[0] = 2.0f * p->data[0];
    opt.step();
    opt.zero_grad();
  }
  CHECK(p->data[0] == doctest::Approx(w_ref));
}

TEST_CASE("weight decay adds lambda*param to the gradient before momentum") {
  const float lr = 0.05f, mu = 0.9f, wd = 0.01f;
  auto p = Tensor::from({1}, {2.0f}, true);
  p->ensure_grad();
  p->grad[0] = 0.3f;
  SgdNesterov opt({p}, lr, mu, wd);
  opt.step();
  const float g = 0.3f + wd * 2.0f;
  const float v = -lr * g;
  CHECK(p->data[0] == doctest::Approx(2.0f + mu * v - lr * g));
}

TEST_CASE("tape replay is deterministic: same seed, bit-identical losses") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    auto x = Tensor::zeros({2, 3, 6, 6});
    for (auto& v : x->data) v = rng.uniform_float(-1, 1);
    auto k = Tensor::zeros({4, 3, 3, 3}, true);
    for (auto& v : k->data) v = rng.normal_float(0.0f, 0.1f);
    auto b = Tensor::zeros({4}, true);
    std::vector<float> losses;
    SgdNesterov opt({k, b}, 0.05f, 0.9f, 1e-4f);
    for (int it = 0; it < 3; ++it) {
      Tape tape;
      auto y = tape.global_average_pool(tape.relu(tape.conv2d(x, k, b, 1, 1)));
      auto loss = tape.reduce_sum(tape.multiply(y, y));
      losses.push_back(loss->data[0]);
      tape.backward(loss);
      opt.step();
      opt.zero_grad();
    }
    return losses;
  };
  auto a = run(42), b = run(42), c = run(43);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
  CHECK(a != c);
}
