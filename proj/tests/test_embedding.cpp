#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "swem/common.hpp"
#include "swem/embedding.hpp"
#include "swem/gradient_check.hpp"
#include "swem/parameter_store.hpp"
#include "swem/rng.hpp"

using namespace swem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("swem_test_" + name);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("load_glove: two-line schema") {
  const auto path = write_temp("glove_basic.txt", "a 1 2\nb 3 4\n");
  const auto result = load_glove(path);
  CHECK(result.vocab.size() == 4);  // pad, oov, a, b
  CHECK(result.embedding.dim == 2);
  CHECK(result.vocab.lookup("a") == 2);
  CHECK(result.vocab.lookup("b") == 3);
  CHECK(result.embedding.table(2, 0) == 1.0);
  CHECK(result.embedding.table(2, 1) == 2.0);
  CHECK(result.embedding.table(3, 0) == 3.0);
  // Pad and oov rows are zero after ingestion.
  CHECK(result.embedding.table(0, 0) == 0.0);
  CHECK(result.embedding.table(1, 0) == 0.0);
  CHECK(result.warnings.empty());
}

TEST_CASE("load_glove: wrong arity cites the line number") {
  const auto path = write_temp("glove_arity.txt",
                               "a 1 2\nb 3 4\nc 5 6\nd 7 8\ne 9 10\nf 11 12\ng 13\n");
  CHECK_THROWS_WITH_AS(load_glove(path), doctest::Contains(":7"), FormatError);
}

TEST_CASE("load_glove: duplicate token keeps first occurrence and warns") {
  const auto path = write_temp("glove_dup.txt", "a 1 2\na 9 9\nb 3 4\n");
  const auto result = load_glove(path);
  CHECK(result.vocab.size() == 4);
  CHECK(result.embedding.table(2, 0) == 1.0);  // first occurrence wins
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("duplicate") != std::string::npos);
  CHECK(result.warnings[0].find(":2") != std::string::npos);
}

TEST_CASE("load_glove: empty file and missing file fail") {
  const auto path = write_temp("glove_empty.txt", "");
  CHECK_THROWS_AS(load_glove(path), FormatError);
  CHECK_THROWS_AS(load_glove("/nonexistent/glove.txt"), FormatError);
}

TEST_CASE("load_glove: vocabulary filter keeps only requested tokens") {
  const auto path = write_temp("glove_filter.txt", "a 1 2\nb 3 4\nc 5 6\n");
  const std::set<std::string> filter{"a", "c"};
  const auto result = load_glove(path, &filter);
  CHECK(result.vocab.size() == 4);
  CHECK(result.vocab.contains("a"));
  CHECK(!result.vocab.contains("b"));
  CHECK(result.vocab.contains("c"));
}

TEST_CASE("load_glove: idempotent (bit-identical reload)") {
  const auto path = write_temp("glove_idem.txt", "tok1 0.125 -3.5 7\ntok2 1e-3 2.25 -0.875\n");
  const auto first = load_glove(path);
  const auto second = load_glove(path);
  CHECK(first.embedding.table.data == second.embedding.table.data);
  CHECK(first.vocab.tokens() == second.vocab.tokens());
}

TEST_CASE("load_glove: CRLF line endings tolerated") {
  const auto path = write_temp("glove_crlf.txt", "a 1 2\r\nb 3 4\r\n");
  const auto result = load_glove(path);
  CHECK(result.embedding.dim == 2);
  CHECK(result.embedding.table(3, 1) == 4.0);
}

TEST_CASE("init_oov: range, empty set, and uniform mean") {
  const auto path = write_temp("glove_oov.txt", "a 1 2\n");
  auto result = load_glove(path);
  Rng rng(31);

  const Tensor2 before = result.embedding.table;
  init_oov(result.vocab, result.embedding, {}, rng);
  CHECK(result.embedding.table.data == before.data);

  std::vector<std::string> tokens;
  for (int i = 0; i < 50000; ++i) tokens.push_back("new" + std::to_string(i));
  init_oov(result.vocab, result.embedding, tokens, rng);
  CHECK(result.vocab.size() == 3 + 50000);

  double sum = 0.0;
  long long n = 0;
  for (int i = 3; i < result.vocab.size(); ++i) {
    for (int k = 0; k < 2; ++k) {
      const double v = result.embedding.table(i, k);
      CHECK(v >= -0.01);
      CHECK(v <= 0.01);
      sum += v;
      ++n;
    }
  }
  // Mean of U(-0.01, 0.01) is 0 with standard error (0.01/sqrt(3))/sqrt(n).
  const double se = 0.01 / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / n) < 3.0 * se);

  CHECK_THROWS_AS(init_oov(result.vocab, result.embedding, {"a"}, rng), ConfigError);
}

TEST_CASE("random_init_embeddings: pad row zero, range, seed sensitivity") {
  Vocabulary vocab;
  for (int i = 0; i < 20; ++i) vocab.add("w" + std::to_string(i));
  Rng rng1(5);
  const auto e1 = random_init_embeddings(vocab, 8, rng1);
  for (int k = 0; k < 8; ++k) CHECK(e1.table(0, k) == 0.0);
  for (int i = 1; i < vocab.size(); ++i) {
    for (int k = 0; k < 8; ++k) {
      CHECK(e1.table(i, k) >= -0.01);
      CHECK(e1.table(i, k) <= 0.01);
    }
  }
  Rng rng2(6);
  const auto e2 = random_init_embeddings(vocab, 8, rng2);
  CHECK(e1.table.data != e2.table.data);

  Rng rng3(5);
  const auto e3 = random_init_embeddings(vocab, 8, rng3);
  CHECK(e1.table.data == e3.table.data);

  CHECK_THROWS_AS(random_init_embeddings(vocab, 0, rng1), ConfigError);
}

TEST_CASE("make_token_batch: mask and padding invariants") {
  const auto batch = make_token_batch({{2, 3, 4}, {5}});
  CHECK(batch.batch == 2);
  CHECK(batch.max_len == 3);
  CHECK(batch.lengths[0] == 3);
  CHECK(batch.lengths[1] == 1);
  CHECK(batch.valid(0, 2));
  CHECK(!batch.valid(1, 1));
  CHECK(batch.index(1, 1) == Vocabulary::kPadIndex);
  CHECK(batch.index(1, 2) == Vocabulary::kPadIndex);

  CHECK_THROWS_AS(make_token_batch({{2}, {}}), DataError);
}

TEST_CASE("embed: plain lookup matches table rows") {
  Vocabulary vocab;
  vocab.add("x");
  vocab.add("y");
  Rng rng(9);
  auto emb = random_init_embeddings(vocab, 4, rng);
  const auto batch = make_token_batch({{2, 3}, {3}});
  const Tensor3 out = embed_forward(batch, emb);
  for (int k = 0; k < 4; ++k) {
    CHECK(out(0, 0, k) == emb.table(2, k));
    CHECK(out(0, 1, k) == emb.table(3, k));
    CHECK(out(1, 0, k) == emb.table(3, k));
  }
  const auto bad = make_token_batch({{99}});
  CHECK_THROWS_AS(embed_forward(bad, emb), DataError);
}

TEST_CASE("embed backward: repeated token accumulates; pad row untouched") {
  Vocabulary vocab;
  vocab.add("x");
  Rng rng(13);
  auto emb = random_init_embeddings(vocab, 3, rng);
  // One sequence with the same token twice, padded against a longer row.
  const auto batch = make_token_batch({{2, 2}, {2, 2, 2}});
  EmbedCache cache;
  const Tensor3 out = embed_forward(batch, emb.table, nullptr, nullptr, &cache);
  Tensor3 upstream(out.dim0, out.dim1, out.dim2);
  // Gradient flows only through valid positions of row 0.
  for (int k = 0; k < 3; ++k) {
    upstream(0, 0, k) = 1.0;
    upstream(0, 1, k) = 1.0;
  }
  Tensor2 table_grad(emb.table.rows, emb.table.cols);
  EmbedGrads grads;
  grads.table_grad = &table_grad;
  embed_backward(upstream, batch, nullptr, cache, grads);
  for (int k = 0; k < 3; ++k) {
    CHECK(table_grad(2, k) == 2.0);  // sum over both occurrences
    CHECK(table_grad(0, k) == 0.0);  // pad row receives nothing
    CHECK(table_grad(1, k) == 0.0);
  }
}

TEST_CASE("embed gradient check: table and refinement parameters") {
  Rng rng(17);
  const int dim = 3;
  ParameterStore store;
  Tensor2& table = store.create("table", 5, dim);
  for (int i = 1; i < 5; ++i) {
    for (int k = 0; k < dim; ++k) table(i, k) = rng.uniform(-0.5, 0.5);
  }
  Tensor2& w1 = store.create("w1", dim, dim);
  for (Real& v : w1.data) v = rng.uniform(-0.8, 0.8);
  Tensor2& b1 = store.create("b1", 1, dim);
  for (Real& v : b1.data) v = rng.uniform(0.05, 0.4);  // keep pre-activations off the kink

  const auto batch = make_token_batch({{2, 3, 2}, {4}});
  Tensor2 weights(2, dim);  // fixed mixing weights turn the output into a scalar
  for (Real& v : weights.data) v = rng.uniform(-1, 1);

  auto loss_only = [&] {
    const Tensor3 out =
        embed_forward(batch, store.value("table"), &store.value("w1"), &store.value("b1"), nullptr);
    double loss = 0.0;
    for (int i = 0; i < out.dim0; ++i) {
      for (int j = 0; j < batch.lengths[i]; ++j) {
        for (int k = 0; k < dim; ++k) loss += weights(i, k) * out(i, j, k);
      }
    }
    return loss;
  };

  EmbedCache cache;
  const Tensor3 out =
      embed_forward(batch, store.value("table"), &store.value("w1"), &store.value("b1"), &cache);
  Tensor3 upstream(out.dim0, out.dim1, out.dim2);
  for (int i = 0; i < out.dim0; ++i) {
    for (int j = 0; j < batch.lengths[i]; ++j) {
      for (int k = 0; k < dim; ++k) upstream(i, j, k) = weights(i, k);
    }
  }
  EmbedGrads grads;
  grads.table_grad = &store.grad("table");
  grads.w1_grad = &store.grad("w1");
  grads.b1_grad = &store.grad("b1");
  embed_backward(upstream, batch, &store.value("w1"), cache, grads);

  const auto report = gradient_check(store, loss_only);
  CHECK(report.max_rel_err < 1e-4);
}
