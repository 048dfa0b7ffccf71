#include "doctest.h"

#include <cmath>
#include <set>

#include "swem/common.hpp"
#include "swem/gradient_check.hpp"
#include "swem/layers.hpp"
#include "swem/parameter_store.hpp"
#include "swem/rng.hpp"
#include "swem/tensor.hpp"

using namespace swem;

TEST_CASE("tensor2 basics") {
  Tensor2 t(2, 3, 1.5);
  CHECK(t.rows == 2);
  CHECK(t.cols == 3);
  CHECK(t(1, 2) == 1.5);
  t(0, 1) = -2.0;
  CHECK(t(0, 1) == -2.0);
  CHECK(t.size() == 6);

  const Tensor2 a = Tensor2::from_rows({{1, 2, 3}, {4, 5, 6}});
  const Tensor2 b = Tensor2::from_rows({{7, 8}, {9, 10}, {11, 12}});
  const Tensor2 c = matmul(a, b);
  CHECK(c(0, 0) == 58);
  CHECK(c(0, 1) == 64);
  CHECK(c(1, 0) == 139);
  CHECK(c(1, 1) == 154);

  CHECK_THROWS_AS(matmul(a, a), ConfigError);
}

TEST_CASE("rng determinism and split independence") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng parent(7);
  Rng c1 = parent.split("one");
  Rng c2 = parent.split("two");
  CHECK(c1.next_u64() != c2.next_u64());

  // Splitting is a pure function of the parent key.
  Rng c1_again = parent.split("one");
  c1 = parent.split("one");
  for (int i = 0; i < 10; ++i) CHECK(c1.next_u64() == c1_again.next_u64());
}

TEST_CASE("rng uniform and integer draws stay in range") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(-0.01, 0.01);
    CHECK(v >= -0.01);
    CHECK(v <= 0.01);
    const int n = rng.uniform_int(7);
    CHECK(n >= 0);
    CHECK(n < 7);
  }
}

TEST_CASE("rng normal moments") {
  Rng rng(11);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);
}

TEST_CASE("rng shuffle is a permutation") {
  Rng rng(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(v);
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 10);
}

TEST_CASE("affine forward: identity, bias pass-through, hand product") {
  const Tensor2 identity = Tensor2::from_rows({{1, 0}, {0, 1}});
  const Tensor2 zero_bias(1, 2);

  const Tensor2 x = Tensor2::from_rows({{1, 2}});
  const Tensor2 out1 = affine_forward(x, identity, zero_bias);
  CHECK(out1(0, 0) == 1);
  CHECK(out1(0, 1) == 2);

  const Tensor2 zeros = Tensor2::from_rows({{0, 0}});
  const Tensor2 any_w = Tensor2::from_rows({{4, -7}, {2, 9}});
  const Tensor2 bias = Tensor2::from_rows({{3, -1}});
  const Tensor2 out2 = affine_forward(zeros, any_w, bias);
  CHECK(out2(0, 0) == 3);
  CHECK(out2(0, 1) == -1);

  const Tensor2 x3 = Tensor2::from_rows({{1, 1}});
  const Tensor2 w3 = Tensor2::from_rows({{2, -1}, {0, 3}});
  const Tensor2 b3 = Tensor2::from_rows({{1, 1}});
  const Tensor2 out3 = affine_forward(x3, w3, b3);
  CHECK(out3(0, 0) == 3);
  CHECK(out3(0, 1) == 3);

  CHECK_THROWS_AS(affine_forward(x, w3, Tensor2(1, 3)), ConfigError);
}

TEST_CASE("affine backward: hand gradients and zero upstream") {
  const Tensor2 x = Tensor2::from_rows({{1, 2}});
  const Tensor2 identity = Tensor2::from_rows({{1, 0}, {0, 1}});
  const Tensor2 ones = Tensor2::from_rows({{1, 1}});
  AffineGrads g = affine_backward(ones, x, identity);
  CHECK(g.grad_b(0, 0) == 1);
  CHECK(g.grad_b(0, 1) == 1);
  CHECK(g.grad_w(0, 0) == 1);
  CHECK(g.grad_w(0, 1) == 1);
  CHECK(g.grad_w(1, 0) == 2);
  CHECK(g.grad_w(1, 1) == 2);

  const Tensor2 zeros(1, 2);
  AffineGrads gz = affine_backward(zeros, x, identity);
  for (Real v : gz.grad_x.data) CHECK(v == 0);
  for (Real v : gz.grad_w.data) CHECK(v == 0);
  for (Real v : gz.grad_b.data) CHECK(v == 0);
}

TEST_CASE("relu forward/backward definition incl. zero convention") {
  const Tensor2 x = Tensor2::from_rows({{-1, 0, 2}});
  const Tensor2 out = relu_forward(x);
  CHECK(out(0, 0) == 0);
  CHECK(out(0, 1) == 0);
  CHECK(out(0, 2) == 2);

  const Tensor2 upstream = Tensor2::from_rows({{5, 5, 5}});
  const Tensor2 back = relu_backward(upstream, x);
  CHECK(back(0, 0) == 0);
  CHECK(back(0, 1) == 0);  // gradient at exactly 0 is 0
  CHECK(back(0, 2) == 5);
}

TEST_CASE("softmax cross entropy: symmetry, stability, hand value") {
  {
    const Tensor2 logits = Tensor2::from_rows({{0, 0}});
    const int labels[] = {0};
    const auto r = softmax_cross_entropy(logits, labels);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  {
    const Tensor2 logits = Tensor2::from_rows({{1000, -1000}});
    const int labels[] = {0};
    const auto r = softmax_cross_entropy(logits, labels);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-12));
  }
  {
    const Tensor2 logits = Tensor2::from_rows({{1, 2, 3}});
    const int labels[] = {2};
    const auto r = softmax_cross_entropy(logits, labels);
    const double expected =
        -std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
    CHECK(r.loss == doctest::Approx(expected).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(0.4076).epsilon(1e-4));
  }
  {
    const Tensor2 logits = Tensor2::from_rows({{0, 0}, {1, 2}});
    const int labels[] = {0, 3};
    CHECK_THROWS_WITH_AS(softmax_cross_entropy(logits, labels) /* row index named */,
                         doctest::Contains("row 1"), DataError);
  }
}

TEST_CASE("softmax rows sum to one; loss non-negative") {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const int b = 1 + rng.uniform_int(5);
    const int c = 2 + rng.uniform_int(6);
    Tensor2 logits(b, c);
    for (Real& v : logits.data) v = rng.uniform(-30, 30);
    const Tensor2 probs = softmax(logits);
    for (int i = 0; i < b; ++i) {
      double sum = 0.0;
      for (int j = 0; j < c; ++j) sum += probs(i, j);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::vector<int> labels(b);
    for (int i = 0; i < b; ++i) labels[i] = rng.uniform_int(c);
    const auto r = softmax_cross_entropy(logits, labels);
    CHECK(r.loss >= 0.0);
  }
}

TEST_CASE("sigmoid binary cross entropy: symmetry, stability, hand value") {
  {
    const Tensor2 logits = Tensor2::from_rows({{0}});
    const int labels[] = {1};
    const auto r = sigmoid_binary_cross_entropy(logits, labels);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  {
    const Tensor2 logits = Tensor2::from_rows({{40}});
    const int labels[] = {1};
    const auto r = sigmoid_binary_cross_entropy(logits, labels);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss < 1e-12);
  }
  {
    const Tensor2 logits = Tensor2::from_rows({{1}});
    const int labels[] = {0};
    const auto r = sigmoid_binary_cross_entropy(logits, labels);
    CHECK(r.loss == doctest::Approx(std::log(1.0 + std::exp(1.0))).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(1.3133).epsilon(1e-4));
  }
  {
    const Tensor2 logits = Tensor2::from_rows({{1}});
    const int labels[] = {2};
    CHECK_THROWS_AS(sigmoid_binary_cross_entropy(logits, labels), DataError);
  }
}

TEST_CASE("dropout: degenerate rate, inference identity, expectation") {
  Rng rng(23);
  std::vector<Real> x{1.0, -2.0, 3.5, 0.25};

  auto r0 = dropout_forward(x, 0.0, rng, true);
  CHECK(r0.out == x);
  for (Real m : r0.mask) CHECK(m == 1.0);

  auto ri = dropout_forward(x, 0.9, rng, false);
  CHECK(ri.out == x);

  // Inverted dropout preserves expectation (law of large numbers).
  const int trials = 10000;
  std::vector<double> mean(x.size(), 0.0);
  for (int t = 0; t < trials; ++t) {
    auto r = dropout_forward(x, 0.5, rng, true);
    for (std::size_t i = 0; i < x.size(); ++i) mean[i] += r.out[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean[i] /= trials;
    CHECK(std::abs(mean[i] - x[i]) <= 0.05 * std::abs(x[i]));
  }

  CHECK_THROWS_AS(dropout_forward(x, 1.0, rng, true), ConfigError);
}

TEST_CASE("dropout backward routes through the mask") {
  Rng rng(29);
  std::vector<Real> x{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  auto fwd = dropout_forward(x, 0.5, rng, true);
  std::vector<Real> upstream(x.size(), 2.0);
  auto back = dropout_backward(upstream, fwd.mask);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(back[i] == 2.0 * fwd.mask[i]);
  }
}

TEST_CASE("adam: zero gradient on a fresh store is a no-op") {
  ParameterStore store;
  Tensor2& w = store.create("w", 2, 2);
  w = Tensor2::from_rows({{0.5, -0.25}, {1.5, 0.0}});
  const Tensor2 before = w;
  adam_step(store, AdamConfig{});
  CHECK(store.value("w").data == before.data);
  CHECK(store.step_count() == 1);
}

TEST_CASE("adam: first-step hand value") {
  // theta = 0, g = 2, lr = 1e-3, defaults: after one step
  // m = 0.2, v = 0.004, m_hat = 2, v_hat = 4 -> theta = -1e-3 * 2/(2 + 1e-8)
  ParameterStore store;
  store.create("theta", 1, 1);
  store.grad("theta")(0, 0) = 2.0;
  AdamConfig cfg;
  cfg.learning_rate = 1e-3;
  adam_step(store, cfg);
  CHECK(store.value("theta")(0, 0) == doctest::Approx(-9.99999995e-4).epsilon(1e-12));
  // Gradients are zeroed after the step.
  CHECK(store.grad("theta")(0, 0) == 0.0);
}

TEST_CASE("adam: frozen entries stay bit-identical") {
  ParameterStore store;
  Tensor2& w = store.create("trainable", 1, 2);
  w = Tensor2::from_rows({{1.0, 2.0}});
  Tensor2& f = store.create("frozen", 1, 2, /*trainable=*/false);
  f = Tensor2::from_rows({{3.0, 4.0}});
  store.grad("trainable").fill(1.0);
  store.grad("frozen").fill(1.0);
  const Tensor2 frozen_before = f;
  adam_step(store, AdamConfig{});
  CHECK(store.value("frozen").data == frozen_before.data);
  CHECK(store.value("trainable")(0, 0) != 1.0);
}

TEST_CASE("adam: NaN gradient names the entry") {
  ParameterStore store;
  store.create("bad/entry", 1, 1);
  store.grad("bad/entry")(0, 0) = std::nan("");
  CHECK_THROWS_WITH_AS(adam_step(store, AdamConfig{}), doctest::Contains("bad/entry"),
                       NumericError);
}

namespace {

// Quadratic reference model: loss = 0.5 * ||x.W + b - target||^2.
double quadratic_loss(const ParameterStore& store, const Tensor2& x, const Tensor2& target) {
  const Tensor2 out = affine_forward(x, store.value("w"), store.value("b"));
  double loss = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double d = out.data[i] - target.data[i];
    loss += 0.5 * d * d;
  }
  return loss;
}

}  // namespace

TEST_CASE("gradient_check: linear model with squared loss is exact") {
  Rng rng(101);
  ParameterStore store;
  Tensor2& w = store.create("w", 3, 2);
  Tensor2& b = store.create("b", 1, 2);
  for (Real& v : w.data) v = rng.uniform(-1, 1);
  for (Real& v : b.data) v = rng.uniform(-1, 1);
  Tensor2 x(4, 3);
  for (Real& v : x.data) v = rng.uniform(-1, 1);
  Tensor2 target(4, 2);
  for (Real& v : target.data) v = rng.uniform(-1, 1);

  // Analytic gradients.
  const Tensor2 out = affine_forward(x, w, b);
  Tensor2 upstream(4, 2);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    upstream.data[i] = out.data[i] - target.data[i];
  }
  AffineGrads g = affine_backward(upstream, x, w);
  store.grad("w") = g.grad_w;
  store.grad("b") = g.grad_b;

  const auto report =
      gradient_check(store, [&] { return quadratic_loss(store, x, target); });
  CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("gradient_check: two-layer relu network across 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed * 7919 + 13);
    ParameterStore store;
    Tensor2& w1 = store.create("w1", 4, 5);
    Tensor2& b1 = store.create("b1", 1, 5);
    Tensor2& w2 = store.create("w2", 5, 3);
    Tensor2& b2 = store.create("b2", 1, 3);
    for (Real& v : w1.data) v = rng.uniform(-1, 1);
    for (Real& v : b1.data) v = rng.uniform(-0.5, 0.5);
    for (Real& v : w2.data) v = rng.uniform(-1, 1);
    for (Real& v : b2.data) v = rng.uniform(-0.5, 0.5);
    Tensor2 x(3, 4);
    for (Real& v : x.data) v = rng.uniform(-1, 1);
    std::vector<int> labels{0, 2, 1};

    auto loss_only = [&] {
      const Tensor2 h_pre = affine_forward(x, store.value("w1"), store.value("b1"));
      const Tensor2 h = relu_forward(h_pre);
      const Tensor2 logits = affine_forward(h, store.value("w2"), store.value("b2"));
      return softmax_cross_entropy(logits, labels).loss;
    };

    // Skip seeds whose pre-activations sit on a ReLU kink.
    const Tensor2 h_pre = affine_forward(x, w1, b1);
    bool near_kink = false;
    for (Real v : h_pre.data) near_kink |= std::abs(v) < 1e-5;
    if (near_kink) continue;

    const Tensor2 h = relu_forward(h_pre);
    const Tensor2 logits = affine_forward(h, w2, b2);
    auto ce = softmax_cross_entropy(logits, labels);
    AffineGrads top = affine_backward(ce.grad_logits, h, w2);
    store.grad("w2") = top.grad_w;
    store.grad("b2") = top.grad_b;
    const Tensor2 d_pre = relu_backward(top.grad_x, h_pre);
    AffineGrads bottom = affine_backward(d_pre, x, w1);
    store.grad("w1") = bottom.grad_w;
    store.grad("b1") = bottom.grad_b;

    const auto report = gradient_check(store, loss_only);
    CHECK(report.max_rel_err < 1e-4);
  }
}

TEST_CASE("neumaier accumulation is immune to summand order") {
  Rng rng(211);
  std::vector<Real> values(257);
  for (Real& v : values) v = rng.uniform(-10, 10) * std::pow(10.0, rng.uniform_int(6) - 3);
  NeumaierAcc forward;
  for (Real v : values) forward.add(v);
  std::vector<Real> shuffled = values;
  for (int trial = 0; trial < 25; ++trial) {
    rng.shuffle(shuffled);
    NeumaierAcc acc;
    for (Real v : shuffled) acc.add(v);
    CHECK(acc.result() == forward.result());
  }
}
