#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "swem/rng.hpp"
#include "swem/tensor.hpp"

namespace swem {

// Token <-> index map. Index 0 is the padding slot, index 1 the shared
// out-of-vocabulary fallback; real tokens occupy [2, V).
class Vocabulary {
 public:
  static constexpr int kPadIndex = 0;
  static constexpr int kOovIndex = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kOovToken = "<oov>";

  Vocabulary();

  // Adds a token if absent; returns its index either way.
  int add(const std::string& token);
  // Index of a token, or kOovIndex when unknown.
  int lookup(const std::string& token) const;
  bool contains(const std::string& token) const { return token_to_index_.count(token) != 0; }

  int size() const { return static_cast<int>(index_to_token_.size()); }
  const std::string& token(int index) const { return index_to_token_.at(index); }
  const std::vector<std::string>& tokens() const { return index_to_token_; }

 private:
  std::unordered_map<std::string, int> token_to_index_;
  std::vector<std::string> index_to_token_;
};

struct RefinementParams {
  Tensor2 w1;  // [K x K]
  Tensor2 b1;  // [1 x K]
};

enum class EmbeddingMode { kDirect, kMlpRefined, kAuto };

// Dense V x K word-vector table. Row 0 (padding) stays all-zero and never
// receives gradient.
struct EmbeddingMatrix {
  Tensor2 table;  // [V x K]
  int dim = 0;
  bool trainable = true;
  std::optional<RefinementParams> refinement;
};

struct GloveLoadResult {
  Vocabulary vocab;
  EmbeddingMatrix embedding;
  std::vector<std::string> warnings;  // duplicate-token notes, reserved-token skips
};

// Reads a whitespace text embedding file: one `token v1 .. vK` entry per
// line, K inferred from the first line. When a filter is given only tokens in
// it are retained. Duplicate tokens keep their first occurrence and add a
// warning.
GloveLoadResult load_glove(const std::string& path,
                           const std::set<std::string>* vocabulary_filter = nullptr);

// Adds one row per token, drawn i.i.d. uniform on [-0.01, 0.01]. Tokens
// already present are an error.
void init_oov(Vocabulary& vocab, EmbeddingMatrix& embedding, const std::vector<std::string>& tokens,
              Rng& rng);

// Fresh table over an existing vocabulary: every non-pad row uniform on
// [-0.01, 0.01] (same law as out-of-vocabulary rows).
EmbeddingMatrix random_init_embeddings(const Vocabulary& vocab, int dim, Rng& rng);

// Padded index batch. mask[i][j] == 1 iff j < lengths[i]; padded slots hold
// the pad index.
struct TokenBatch {
  int batch = 0;
  int max_len = 0;
  std::vector<std::int32_t> indices;  // [batch x max_len], row-major
  std::vector<int> lengths;
  std::vector<std::uint8_t> mask;

  std::int32_t index(int i, int j) const { return indices[static_cast<std::size_t>(i) * max_len + j]; }
  bool valid(int i, int j) const { return mask[static_cast<std::size_t>(i) * max_len + j] != 0; }
};

// Builds a batch from index sequences. Every sequence must be non-empty.
TokenBatch make_token_batch(const std::vector<std::vector<std::int32_t>>& sequences);

struct EmbedCache {
  // Raw row lookups, flattened to [batch*max_len x K].
  Tensor2 lookup;
  // Pre-activation of the refinement layer (only set when refining).
  Tensor2 preact;
};

// Row lookup, optionally refined per word by relu(v . W1 + b1) when w1/b1
// are given. Output is [batch x max_len x K]. The cache is required for the
// backward pass.
Tensor3 embed_forward(const TokenBatch& batch, const Tensor2& table, const Tensor2* w1,
                      const Tensor2* b1, EmbedCache* cache);
Tensor3 embed_forward(const TokenBatch& batch, const EmbeddingMatrix& embedding,
                      EmbedCache* cache = nullptr);

struct EmbedGrads {
  Tensor2* table_grad = nullptr;  // [V x K]; null when the table is frozen
  Tensor2* w1_grad = nullptr;     // refinement grads; null when not refining
  Tensor2* b1_grad = nullptr;
};

// Accumulates gradients for the rows referenced by the batch (never the pad
// row) and for the refinement parameters.
void embed_backward(const Tensor3& upstream, const TokenBatch& batch, const Tensor2* w1,
                    const EmbedCache& cache, EmbedGrads grads);

}  // namespace swem
