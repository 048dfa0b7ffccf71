#include "doctest.h"

#include <cmath>

#include "swem/common.hpp"
#include "swem/encoders.hpp"
#include "swem/gradient_check.hpp"
#include "swem/layers.hpp"
#include "swem/rng.hpp"

using namespace swem;

namespace {

// Random embedded batch with the given shape; valid positions only (padded
// slots stay zero and must be provably ignored).
Tensor3 random_embedded(const TokenBatch& batch, int dim, Rng& rng) {
  Tensor3 emb(batch.batch, batch.max_len, dim);
  for (int i = 0; i < batch.batch; ++i) {
    for (int j = 0; j < batch.lengths[i]; ++j) {
      for (int k = 0; k < dim; ++k) emb(i, j, k) = rng.uniform(-2, 2);
    }
  }
  return emb;
}

TokenBatch batch_of_lengths(const std::vector<int>& lengths) {
  std::vector<std::vector<std::int32_t>> rows;
  for (int len : lengths) rows.emplace_back(len, 2);
  return make_token_batch(rows);
}

// Applies a permutation to the valid prefix of each sequence.
Tensor3 permute_words(const Tensor3& emb, const TokenBatch& batch, Rng& rng) {
  Tensor3 out = emb;
  for (int i = 0; i < batch.batch; ++i) {
    std::vector<int> order(batch.lengths[i]);
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
    rng.shuffle(order);
    for (int j = 0; j < batch.lengths[i]; ++j) {
      for (int k = 0; k < emb.dim2; ++k) out(i, j, k) = emb(i, order[j], k);
    }
  }
  return out;
}

const Tensor3 kTwoWordExample = [] {
  Tensor3 emb(1, 2, 3);
  emb(0, 0, 0) = 1;
  emb(0, 0, 1) = -2;
  emb(0, 0, 2) = 3;
  emb(0, 1, 0) = 3;
  emb(0, 1, 1) = 0;
  emb(0, 1, 2) = -1;
  return emb;
}();

}  // namespace

TEST_CASE("pool_average: single word, hand arithmetic, padding ignored") {
  {
    const auto batch = batch_of_lengths({1});
    Tensor3 emb(1, 1, 3);
    emb(0, 0, 0) = 0.5;
    emb(0, 0, 1) = -1.5;
    emb(0, 0, 2) = 2.0;
    const Tensor2 z = pool_average(emb, batch);
    CHECK(z(0, 0) == 0.5);
    CHECK(z(0, 1) == -1.5);
    CHECK(z(0, 2) == 2.0);
  }
  {
    const auto batch = batch_of_lengths({2});
    const Tensor2 z = pool_average(kTwoWordExample, batch);
    CHECK(z(0, 0) == 2.0);
    CHECK(z(0, 1) == -1.0);
    CHECK(z(0, 2) == 1.0);
  }
  {
    // Batch with lengths {1,3} padded to 3: equal to per-sequence results.
    Rng rng(37);
    const auto batch = batch_of_lengths({1, 3});
    const Tensor3 emb = random_embedded(batch, 4, rng);
    const Tensor2 z = pool_average(emb, batch);

    const auto single = batch_of_lengths({1});
    Tensor3 emb1(1, 1, 4);
    for (int k = 0; k < 4; ++k) emb1(0, 0, k) = emb(0, 0, k);
    const Tensor2 z1 = pool_average(emb1, single);
    for (int k = 0; k < 4; ++k) CHECK(z(0, k) == z1(0, k));

    const auto triple = batch_of_lengths({3});
    Tensor3 emb3(1, 3, 4);
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 4; ++k) emb3(0, j, k) = emb(1, j, k);
    }
    const Tensor2 z3 = pool_average(emb3, triple);
    for (int k = 0; k < 4; ++k) CHECK(z(1, k) == z3(0, k));
  }
}

TEST_CASE("pool_max: definition, tie to first position, max >= average") {
  const auto batch = batch_of_lengths({2});
  MaxPoolCache cache;
  const Tensor2 z = pool_max(kTwoWordExample, batch, &cache);
  CHECK(z(0, 0) == 3.0);
  CHECK(z(0, 1) == 0.0);
  CHECK(z(0, 2) == 3.0);

  // All words identical: entire gradient flows to position 0.
  Tensor3 same(1, 3, 2);
  for (int j = 0; j < 3; ++j) {
    same(0, j, 0) = 0.7;
    same(0, j, 1) = -0.4;
  }
  const auto batch3 = batch_of_lengths({3});
  MaxPoolCache tie_cache;
  const Tensor2 zt = pool_max(same, batch3, &tie_cache);
  CHECK(zt(0, 0) == 0.7);
  CHECK(zt(0, 1) == -0.4);
  Tensor2 upstream(1, 2, 1.0);
  Tensor3 grad(1, 3, 2);
  pool_max_backward(upstream, tie_cache, batch3, grad);
  CHECK(grad(0, 0, 0) == 1.0);
  CHECK(grad(0, 1, 0) == 0.0);
  CHECK(grad(0, 2, 0) == 0.0);

  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = batch_of_lengths({1 + rng.uniform_int(6)});
    const Tensor3 emb = random_embedded(b, 3, rng);
    const Tensor2 zmax = pool_max(emb, b);
    const Tensor2 zavg = pool_average(emb, b);
    for (int k = 0; k < 3; ++k) CHECK(zmax(0, k) >= zavg(0, k));
  }
}

TEST_CASE("pool_concat: definition and exact composition") {
  const auto batch = batch_of_lengths({2});
  const Tensor2 z = pool_concat(kTwoWordExample, batch);
  CHECK(z.cols == 6);
  CHECK(z(0, 0) == 2.0);
  CHECK(z(0, 1) == -1.0);
  CHECK(z(0, 2) == 1.0);
  CHECK(z(0, 3) == 3.0);
  CHECK(z(0, 4) == 0.0);
  CHECK(z(0, 5) == 3.0);
}

TEST_CASE("pool_hier: degenerate identities and hand-enumerated windows") {
  Rng rng(43);
  // n = L equals average pooling; n = 1 equals max pooling (bitwise).
  for (int trial = 0; trial < 50; ++trial) {
    const int len = 1 + rng.uniform_int(7);
    const auto batch = batch_of_lengths({len});
    const Tensor3 emb = random_embedded(batch, 5, rng);
    const Tensor2 as_avg = pool_hier(emb, batch, len);
    const Tensor2 avg = pool_average(emb, batch);
    CHECK(as_avg.data == avg.data);
    const Tensor2 as_max = pool_hier(emb, batch, 1);
    const Tensor2 mx = pool_max(emb, batch);
    CHECK(as_max.data == mx.data);
  }

  // n=2 over a=[0,4], b=[2,0], c=[6,-2]: window means [1,2], [4,-1] -> [4,2].
  Tensor3 emb(1, 3, 2);
  emb(0, 0, 0) = 0;
  emb(0, 0, 1) = 4;
  emb(0, 1, 0) = 2;
  emb(0, 1, 1) = 0;
  emb(0, 2, 0) = 6;
  emb(0, 2, 1) = -2;
  const auto batch = batch_of_lengths({3});
  const Tensor2 z = pool_hier(emb, batch, 2);
  CHECK(z(0, 0) == 4.0);
  CHECK(z(0, 1) == 2.0);

  // Sequences shorter than the window fall back to one whole-sequence window.
  const auto short_batch = batch_of_lengths({2});
  const Tensor2 zs = pool_hier(kTwoWordExample, short_batch, 5);
  const Tensor2 avg = pool_average(kTwoWordExample, short_batch);
  CHECK(zs.data == avg.data);

  CHECK_THROWS_AS(pool_hier(emb, batch, 0), ConfigError);
}

TEST_CASE("pooling algebra properties over random instances") {
  Rng rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    const int batch_size = 1 + rng.uniform_int(3);
    std::vector<int> lengths;
    for (int i = 0; i < batch_size; ++i) lengths.push_back(1 + rng.uniform_int(8));
    const auto batch = batch_of_lengths(lengths);
    const int dim = 1 + rng.uniform_int(6);
    const Tensor3 emb = random_embedded(batch, dim, rng);
    const Tensor3 permuted = permute_words(emb, batch, rng);

    // Permutation invariance, bit-identical.
    CHECK(pool_average(emb, batch).data == pool_average(permuted, batch).data);
    CHECK(pool_max(emb, batch).data == pool_max(permuted, batch).data);
    CHECK(pool_concat(emb, batch).data == pool_concat(permuted, batch).data);

    // Concat is exactly [aver ; max].
    const Tensor2 avg = pool_average(emb, batch);
    const Tensor2 mx = pool_max(emb, batch);
    const Tensor2 cat = pool_concat(emb, batch);
    for (int i = 0; i < batch.batch; ++i) {
      for (int k = 0; k < dim; ++k) {
        CHECK(cat(i, k) == avg(i, k));
        CHECK(cat(i, dim + k) == mx(i, k));
        CHECK(mx(i, k) >= avg(i, k));
      }
    }

    // Degenerate hier identities on every instance.
    for (int i = 0; i < batch.batch; ++i) {
      const auto one = batch_of_lengths({lengths[i]});
      Tensor3 single(1, lengths[i], dim);
      for (int j = 0; j < lengths[i]; ++j) {
        for (int k = 0; k < dim; ++k) single(0, j, k) = emb(i, j, k);
      }
      CHECK(pool_hier(single, one, 1).data == pool_max(single, one).data);
      CHECK(pool_hier(single, one, lengths[i]).data == pool_average(single, one).data);
    }
  }

  // Order-sensitivity witness for hier(n=2): swapping the first two words of
  // the hand example changes the window means and hence the output
  // ([a,b,c] -> [b,a,c]: windows {[1,2],[4,-1]} become {[1,2],[3,1]}).
  {
    Tensor3 emb(1, 3, 2);
    emb(0, 0, 0) = 0;
    emb(0, 0, 1) = 4;
    emb(0, 1, 0) = 2;
    emb(0, 1, 1) = 0;
    emb(0, 2, 0) = 6;
    emb(0, 2, 1) = -2;
    Tensor3 swapped = emb;
    for (int k = 0; k < 2; ++k) {
      swapped(0, 0, k) = emb(0, 1, k);
      swapped(0, 1, k) = emb(0, 0, k);
    }
    const auto batch = batch_of_lengths({3});
    const Tensor2 a = pool_hier(emb, batch, 2);
    const Tensor2 b = pool_hier(swapped, batch, 2);
    CHECK(a.data != b.data);
    CHECK(b(0, 0) == 3.0);
    CHECK(b(0, 1) == 2.0);
  }
}

TEST_CASE("compositional parameter counts") {
  EncoderConfig swem;
  for (auto variant : {EncoderVariant::kAverage, EncoderVariant::kMax, EncoderVariant::kConcat,
                       EncoderVariant::kHier}) {
    swem.variant = variant;
    CHECK(compositional_param_count(swem, 300) == 0);
  }

  EncoderConfig cnn;
  cnn.variant = EncoderVariant::kCnn;
  cnn.cnn_widths = {5};
  cnn.cnn_filters = 100;
  CHECK(compositional_param_count(cnn, 300) == 150000);

  cnn.cnn_widths = {3, 4, 5};
  CHECK(compositional_param_count(cnn, 300) == (3 + 4 + 5) * 300LL * 100);

  // The parameter registry carries the biases on top of that count.
  ParameterStore store;
  Rng rng(53);
  cnn_register_params(cnn, 300, store, rng);
  CHECK(static_cast<long long>(store.param_count()) ==
        compositional_param_count(cnn, 300) + 3 * 100);
}

TEST_CASE("cnn_encode: width-1 degenerate window equals per-word projection") {
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::kCnn;
  cfg.cnn_widths = {1};
  cfg.cnn_filters = 3;
  ParameterStore store;
  Rng rng(59);
  cnn_register_params(cfg, 3, store, rng);

  const auto batch = batch_of_lengths({1});
  Tensor3 emb(1, 1, 3);
  emb(0, 0, 0) = 0.4;
  emb(0, 0, 1) = -0.9;
  emb(0, 0, 2) = 1.3;
  const Tensor2 z = cnn_encode(emb, batch, cfg, store);

  Tensor2 word(1, 3);
  for (int k = 0; k < 3; ++k) word(0, k) = emb(0, 0, k);
  const Tensor2 expected = relu_forward(
      affine_forward(word, store.value(cnn_weight_name(1)), store.value(cnn_bias_name(1))));
  for (int k = 0; k < 3; ++k) CHECK(z(0, k) == expected(0, k));
}

TEST_CASE("cnn_encode with width-1 filters is permutation invariant") {
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::kCnn;
  cfg.cnn_widths = {1};
  cfg.cnn_filters = 4;
  ParameterStore store;
  Rng rng(61);
  cnn_register_params(cfg, 3, store, rng);

  for (int trial = 0; trial < 100; ++trial) {
    const auto batch = batch_of_lengths({2 + rng.uniform_int(6)});
    const Tensor3 emb = random_embedded(batch, 3, rng);
    const Tensor3 permuted = permute_words(emb, batch, rng);
    CHECK(cnn_encode(emb, batch, cfg, store).data == cnn_encode(permuted, batch, cfg, store).data);
  }
}

TEST_CASE("cnn_encode: short sequences are right-padded with zero vectors") {
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::kCnn;
  cfg.cnn_widths = {3};
  cfg.cnn_filters = 2;
  ParameterStore store;
  Rng rng(67);
  cnn_register_params(cfg, 2, store, rng);

  const auto batch = batch_of_lengths({2});  // shorter than the filter width
  const Tensor3 emb = random_embedded(batch, 2, rng);
  const Tensor2 z = cnn_encode(emb, batch, cfg, store);

  // Hand-build the single zero-padded window.
  Tensor2 window(1, 6);
  for (int j = 0; j < 2; ++j) {
    for (int k = 0; k < 2; ++k) window(0, j * 2 + k) = emb(0, j, k);
  }
  const Tensor2 expected = relu_forward(
      affine_forward(window, store.value(cnn_weight_name(3)), store.value(cnn_bias_name(3))));
  for (int f = 0; f < 2; ++f) CHECK(z(0, f) == expected(0, f));

  EncoderConfig bad = cfg;
  bad.cnn_filters = 0;
  ParameterStore store2;
  CHECK_THROWS_AS(cnn_register_params(bad, 2, store2, rng), ConfigError);
}

namespace {

// Finite-difference check of an encoder's gradient with respect to the
// embedded inputs, via a fixed linear readout. Returns false when the
// instance sits too close to a max/ReLU kink to difference reliably.
bool encoder_grad_check(const EncoderConfig& cfg, ParameterStore& params, const TokenBatch& batch,
                        int dim, Rng& rng, double* max_rel_err) {
  ParameterStore store;
  Tensor2& flat = store.create("embedded", batch.batch * batch.max_len, dim);
  for (int i = 0; i < batch.batch; ++i) {
    for (int j = 0; j < batch.lengths[i]; ++j) {
      for (int k = 0; k < dim; ++k) {
        flat(i * batch.max_len + j, k) = rng.uniform(-1.5, 1.5);
      }
    }
  }
  const int out_dim = cfg.output_dim(dim);
  Tensor2 readout(batch.batch, out_dim);
  for (Real& v : readout.data) v = rng.uniform(-1, 1);

  auto embedded_of = [&](const Tensor2& values) {
    Tensor3 emb(batch.batch, batch.max_len, dim);
    emb.data = values.data;
    return emb;
  };
  auto loss_only = [&] {
    const Tensor3 emb = embedded_of(store.value("embedded"));
    const Tensor2 z = encode(emb, batch, cfg, params, nullptr);
    double loss = 0.0;
    for (std::size_t i = 0; i < z.data.size(); ++i) loss += readout.data[i] * z.data[i];
    return loss;
  };

  // Kink guard: max competitors closer than 1e-4 or winning ReLU
  // activations within 1e-5 of zero make central differences unreliable.
  const Tensor3 emb = embedded_of(store.value("embedded"));
  if (cfg.variant == EncoderVariant::kMax || cfg.variant == EncoderVariant::kConcat) {
    for (int i = 0; i < batch.batch; ++i) {
      for (int k = 0; k < dim; ++k) {
        double best = -1e300;
        double second = -1e300;
        for (int j = 0; j < batch.lengths[i]; ++j) {
          const double v = emb(i, j, k);
          if (v > best) {
            second = best;
            best = v;
          } else if (v > second) {
            second = v;
          }
        }
        if (batch.lengths[i] > 1 && best - second < 1e-4) return false;
      }
    }
  }
  if (cfg.variant == EncoderVariant::kHier) {
    for (int i = 0; i < batch.batch; ++i) {
      const int n = std::min(cfg.hier_window, batch.lengths[i]);
      const int windows = batch.lengths[i] - n + 1;
      for (int k = 0; k < dim; ++k) {
        double best = -1e300;
        double second = -1e300;
        for (int w = 0; w < windows; ++w) {
          double mean = 0.0;
          for (int j = w; j < w + n; ++j) mean += emb(i, j, k);
          mean /= n;
          if (mean > best) {
            second = best;
            best = mean;
          } else if (mean > second) {
            second = mean;
          }
        }
        if (windows > 1 && best - second < 1e-4) return false;
      }
    }
  }
  if (cfg.variant == EncoderVariant::kCnn) {
    EncoderCache cache;
    encode(emb, batch, cfg, params, &cache);
    for (const auto& wc : cache.cnn_cache.per_width) {
      const Tensor2& acts = wc.activations;
      for (int i = 0; i < batch.batch; ++i) {
        for (int f = 0; f < cfg.cnn_filters; ++f) {
          double best = -1e300;
          double second = -1e300;
          for (int row = wc.offsets[i]; row < wc.offsets[i + 1]; ++row) {
            const double v = acts(row, f);
            if (v > best) {
              second = best;
              best = v;
            } else if (v > second) {
              second = v;
            }
          }
          if (wc.offsets[i + 1] - wc.offsets[i] > 1 && best - second < 1e-4) return false;
          if (std::abs(best) < 1e-5) return false;  // winner hugs the ReLU kink
        }
      }
    }
  }

  // Analytic gradients.
  EncoderCache cache;
  encode(emb, batch, cfg, params, &cache);
  Tensor3 d_emb(batch.batch, batch.max_len, dim);
  encode_backward(readout, batch, cfg, params, cache, d_emb);
  store.grad("embedded").data = d_emb.data;

  const auto report = gradient_check(store, loss_only);
  *max_rel_err = report.max_rel_err;
  return true;
}

}  // namespace

TEST_CASE("encoder gradients match finite differences across seeds") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30 && checked < 20; ++seed) {
    Rng rng(seed * 104729);
    const auto batch = batch_of_lengths({1 + rng.uniform_int(6), 1 + rng.uniform_int(6)});
    const int dim = 3;

    for (auto variant : {EncoderVariant::kAverage, EncoderVariant::kMax, EncoderVariant::kConcat,
                         EncoderVariant::kHier, EncoderVariant::kCnn}) {
      EncoderConfig cfg;
      cfg.variant = variant;
      cfg.hier_window = 2;
      cfg.cnn_widths = {2, 3};
      cfg.cnn_filters = 3;
      ParameterStore params;
      if (variant == EncoderVariant::kCnn) {
        Rng prng = rng.split("cnn-params");
        cnn_register_params(cfg, dim, params, prng);
      }
      double err = 0.0;
      Rng trial_rng = rng.split(to_string(variant));
      if (encoder_grad_check(cfg, params, batch, dim, trial_rng, &err)) {
        CHECK(err < 1e-4);
        ++checked;
      }
    }
  }
  CHECK(checked >= 20);
}

TEST_CASE("cnn parameter gradients match finite differences") {
  Rng rng(73);
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::kCnn;
  cfg.cnn_widths = {2};
  cfg.cnn_filters = 3;
  const int dim = 3;
  ParameterStore store;
  Rng prng = rng.split("params");
  cnn_register_params(cfg, dim, store, prng);

  const auto batch = batch_of_lengths({4, 2});
  const Tensor3 emb = random_embedded(batch, dim, rng);
  Tensor2 readout(batch.batch, cfg.output_dim(dim));
  for (Real& v : readout.data) v = rng.uniform(-1, 1);

  auto loss_only = [&] {
    const Tensor2 z = cnn_encode(emb, batch, cfg, store, nullptr);
    double loss = 0.0;
    for (std::size_t i = 0; i < z.data.size(); ++i) loss += readout.data[i] * z.data[i];
    return loss;
  };

  CnnCache cache;
  cnn_encode(emb, batch, cfg, store, &cache);
  Tensor3 d_emb(batch.batch, batch.max_len, dim);
  cnn_encode_backward(readout, batch, cfg, store, cache, d_emb);

  const auto report = gradient_check(store, loss_only);
  CHECK(report.max_rel_err < 1e-4);
}
