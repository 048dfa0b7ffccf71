#include "swem/embedding.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "swem/common.hpp"
#include "swem/layers.hpp"

namespace swem {

Vocabulary::Vocabulary() {
  index_to_token_ = {kPadToken, kOovToken};
  token_to_index_ = {{kPadToken, kPadIndex}, {kOovToken, kOovIndex}};
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_index_.find(token);
  if (it != token_to_index_.end()) return it->second;
  const int index = static_cast<int>(index_to_token_.size());
  index_to_token_.push_back(token);
  token_to_index_.emplace(token, index);
  return index;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_index_.find(token);
  return it == token_to_index_.end() ? kOovIndex : it->second;
}

namespace {

// Splits a line on runs of spaces/tabs. CR from CRLF files is stripped first.
std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

double parse_real(std::string_view field, const std::string& path, std::size_t line_no) {
  double out = 0.0;
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(path + ":" + std::to_string(line_no) + ": not a decimal real: '" +
                      std::string(field) + "'");
  }
  return out;
}

}  // namespace

GloveLoadResult load_glove(const std::string& path, const std::set<std::string>* vocabulary_filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open embedding file: " + path);

  GloveLoadResult result;
  int dim = -1;
  std::string line;
  std::size_t line_no = 0;

  // First pass collects rows token-by-token; the table is assembled after we
  // know the final vocabulary size.
  std::vector<std::pair<int, std::vector<Real>>> rows;  // (vocab index, values)

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_ws(line);
    if (fields.size() < 2) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected token plus values");
    }
    if (dim < 0) {
      dim = static_cast<int>(fields.size()) - 1;
    } else if (static_cast<int>(fields.size()) - 1 != dim) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                        " values, found " + std::to_string(fields.size() - 1));
    }
    const std::string token(fields[0]);
    if (token == Vocabulary::kPadToken || token == Vocabulary::kOovToken) {
      result.warnings.push_back(path + ":" + std::to_string(line_no) + ": reserved token '" + token +
                                "' skipped");
      continue;
    }
    if (vocabulary_filter && !vocabulary_filter->count(token)) continue;
    if (result.vocab.contains(token)) {
      result.warnings.push_back(path + ":" + std::to_string(line_no) + ": duplicate token '" + token +
                                "', first occurrence kept");
      continue;
    }
    std::vector<Real> values(dim);
    for (int k = 0; k < dim; ++k) values[k] = parse_real(fields[k + 1], path, line_no);
    const int index = result.vocab.add(token);
    rows.emplace_back(index, std::move(values));
  }
  if (dim < 0) throw FormatError(path + ": empty embedding file");

  result.embedding.dim = dim;
  result.embedding.table = Tensor2(result.vocab.size(), dim);
  for (const auto& [index, values] : rows) {
    Real* dst = result.embedding.table.row_ptr(index);
    std::copy(values.begin(), values.end(), dst);
  }
  return result;
}

void init_oov(Vocabulary& vocab, EmbeddingMatrix& embedding, const std::vector<std::string>& tokens,
              Rng& rng) {
  if (tokens.empty()) return;
  for (const auto& token : tokens) {
    if (vocab.contains(token)) {
      throw ConfigError("init_oov: token '" + token + "' already in vocabulary");
    }
  }
  const int dim = embedding.dim;
  Tensor2 grown(vocab.size() + static_cast<int>(tokens.size()), dim);
  std::copy(embedding.table.data.begin(), embedding.table.data.end(), grown.data.begin());
  for (const auto& token : tokens) {
    const int index = vocab.add(token);
    Real* row = grown.row_ptr(index);
    for (int k = 0; k < dim; ++k) row[k] = rng.uniform(-0.01, 0.01);
  }
  embedding.table = std::move(grown);
}

EmbeddingMatrix random_init_embeddings(const Vocabulary& vocab, int dim, Rng& rng) {
  if (dim <= 0) throw ConfigError("embedding dim must be positive");
  EmbeddingMatrix embedding;
  embedding.dim = dim;
  embedding.table = Tensor2(vocab.size(), dim);
  for (int i = Vocabulary::kPadIndex + 1; i < vocab.size(); ++i) {
    Real* row = embedding.table.row_ptr(i);
    for (int k = 0; k < dim; ++k) row[k] = rng.uniform(-0.01, 0.01);
  }
  return embedding;
}

TokenBatch make_token_batch(const std::vector<std::vector<std::int32_t>>& sequences) {
  TokenBatch batch;
  batch.batch = static_cast<int>(sequences.size());
  for (const auto& seq : sequences) {
    if (seq.empty()) throw DataError("make_token_batch: empty sequence");
    batch.max_len = std::max(batch.max_len, static_cast<int>(seq.size()));
  }
  batch.indices.assign(static_cast<std::size_t>(batch.batch) * batch.max_len, Vocabulary::kPadIndex);
  batch.mask.assign(batch.indices.size(), 0);
  batch.lengths.resize(batch.batch);
  for (int i = 0; i < batch.batch; ++i) {
    const auto& seq = sequences[i];
    batch.lengths[i] = static_cast<int>(seq.size());
    for (std::size_t j = 0; j < seq.size(); ++j) {
      batch.indices[static_cast<std::size_t>(i) * batch.max_len + j] = seq[j];
      batch.mask[static_cast<std::size_t>(i) * batch.max_len + j] = 1;
    }
  }
  return batch;
}

Tensor3 embed_forward(const TokenBatch& batch, const Tensor2& table, const Tensor2* w1,
                      const Tensor2* b1, EmbedCache* cache) {
  const int dim = table.cols;
  const int vocab_size = table.rows;
  const int flat = batch.batch * batch.max_len;
  Tensor2 lookup(flat, dim);
  for (int i = 0; i < batch.batch; ++i) {
    for (int j = 0; j < batch.max_len; ++j) {
      const std::int32_t index = batch.index(i, j);
      if (index < 0 || index >= vocab_size) {
        throw DataError("embed: token index " + std::to_string(index) + " out of range [0," +
                        std::to_string(vocab_size) + ")");
      }
      const Real* src = table.row_ptr(index);
      Real* dst = lookup.row_ptr(i * batch.max_len + j);
      std::copy(src, src + dim, dst);
    }
  }

  Tensor3 out(batch.batch, batch.max_len, dim);
  if (w1) {
    Tensor2 pre = affine_forward(lookup, *w1, *b1);
    if (cache) cache->preact = pre;
    relu_forward_inplace(pre.data);
    out.data = std::move(pre.data);
  } else {
    out.data = lookup.data;  // copy; the cache keeps the original
  }
  if (cache) cache->lookup = std::move(lookup);
  return out;
}

Tensor3 embed_forward(const TokenBatch& batch, const EmbeddingMatrix& embedding, EmbedCache* cache) {
  const Tensor2* w1 = embedding.refinement ? &embedding.refinement->w1 : nullptr;
  const Tensor2* b1 = embedding.refinement ? &embedding.refinement->b1 : nullptr;
  return embed_forward(batch, embedding.table, w1, b1, cache);
}

void embed_backward(const Tensor3& upstream, const TokenBatch& batch, const Tensor2* w1,
                    const EmbedCache& cache, EmbedGrads grads) {
  const int dim = upstream.dim2;
  const int flat = batch.batch * batch.max_len;
  Tensor2 d_lookup;  // gradient w.r.t. the raw row lookups

  if (w1) {
    Tensor2 d_post(flat, dim);
    std::copy(upstream.data.begin(), upstream.data.end(), d_post.data.begin());
    const Tensor2 d_pre = relu_backward(d_post, cache.preact);
    AffineGrads ag = affine_backward(d_pre, cache.lookup, *w1);
    if (grads.w1_grad) {
      for (std::size_t i = 0; i < ag.grad_w.data.size(); ++i) grads.w1_grad->data[i] += ag.grad_w.data[i];
    }
    if (grads.b1_grad) {
      for (std::size_t i = 0; i < ag.grad_b.data.size(); ++i) grads.b1_grad->data[i] += ag.grad_b.data[i];
    }
    d_lookup = std::move(ag.grad_x);
  } else {
    d_lookup = Tensor2(flat, dim);
    std::copy(upstream.data.begin(), upstream.data.end(), d_lookup.data.begin());
  }

  if (!grads.table_grad) return;
  for (int i = 0; i < batch.batch; ++i) {
    for (int j = 0; j < batch.max_len; ++j) {
      const std::int32_t index = batch.index(i, j);
      if (index == Vocabulary::kPadIndex) continue;
      const Real* src = d_lookup.row_ptr(i * batch.max_len + j);
      Real* dst = grads.table_grad->row_ptr(index);
      for (int k = 0; k < dim; ++k) dst[k] += src[k];
    }
  }
}

}  // namespace swem
