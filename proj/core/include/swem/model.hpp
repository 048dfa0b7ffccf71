#pragma once

#include <span>
#include <string>
#include <vector>

#include "swem/embedding.hpp"
#include "swem/encoders.hpp"
#include "swem/layers.hpp"
#include "swem/parameter_store.hpp"
#include "swem/rng.hpp"

namespace swem {

enum class HeadKind { kMlp, kLinear };

HeadKind parse_head_kind(const std::string& name);
std::string to_string(HeadKind kind);

// Matching feature vector for a sentence pair: [z1 ; z2 ; |z1-z2| ; z1*z2].
Tensor2 pair_combine(const Tensor2& z1, const Tensor2& z2);
// Splits the combined-vector gradient back into the two branch gradients.
// |x| takes subgradient 0 at x == 0, mirroring the ReLU convention.
void pair_combine_backward(const Tensor2& upstream, const Tensor2& z1, const Tensor2& z2,
                           Tensor2& d_z1, Tensor2& d_z2);

struct HeadConfig {
  HeadKind kind = HeadKind::kMlp;
  int hidden_dim = 300;
};

struct ModelSpec {
  EncoderConfig encoder;
  HeadConfig head;
  int num_classes = 2;
  double dropout_rate = 0.2;
  // Binary tasks may use a single sigmoid logit instead of a 2-way softmax.
  bool binary_sigmoid = false;
  // kAuto must be resolved by the trainer before building a model.
  EmbeddingMode embedding_mode = EmbeddingMode::kDirect;
  bool embedding_trainable = true;
  // Pair-matching models feed the head [z1; z2; |z1-z2|; z1*z2].
  bool pair_model = false;
};

// Encoder + classification head over a trainable embedding table, with all
// forward and backward passes written out explicitly. Parameters live in a
// ParameterStore under the names embedding/table, embedding/refine_{w,b},
// cnn/{w,b}<width> and head/*.
class Model {
 public:
  // `initial_table` is copied into the store; its column count fixes the
  // embedding dimension.
  static Model build(const ModelSpec& spec, const Tensor2& initial_table, Rng rng);

  struct BatchResult {
    double loss = 0.0;
    std::vector<int> predictions;
    std::vector<double> row_loss;  // per-example negative log-likelihood
  };

  // Single-sequence classification. When `with_grad` is set, accumulates
  // gradients for every trainable parameter into the store. `rng` drives the
  // dropout masks; passing the same stream reproduces the same loss.
  BatchResult classify(const TokenBatch& batch, std::span<const int> labels, bool training, Rng rng,
                       bool with_grad);

  // Sentence-pair matching with a shared (weight-tied) encoder.
  BatchResult match(const TokenBatch& first, const TokenBatch& second, std::span<const int> labels,
                    bool training, Rng rng, bool with_grad);

  // Sequence representation with dropout disabled; used by analyses.
  Tensor2 represent(const TokenBatch& batch) const;

  // Copy of the current embedding table (and refinement head, if any).
  EmbeddingMatrix embedding_snapshot() const;

  long long compositional_params() const;
  long long total_params() const { return static_cast<long long>(store.param_count()); }
  long long trainable_params() const { return static_cast<long long>(store.param_count(true)); }

  int embedding_dim() const { return embed_dim_; }
  int representation_dim() const { return repr_dim_; }
  int head_input_dim() const { return head_input_dim_; }
  int logit_dim() const { return logit_dim_; }

  ModelSpec spec;
  ParameterStore store;

 private:
  struct EncodeState;

  Tensor2 encode_sequences(const TokenBatch& batch, bool training, Rng& dropout_rng,
                           EncodeState* state) const;
  void encode_sequences_backward(const Tensor2& d_repr, const TokenBatch& batch, EncodeState& state);
  Tensor2 head_forward(const Tensor2& input, Tensor2* hidden_pre) const;
  Tensor2 head_backward(const Tensor2& d_logits, const Tensor2& input, const Tensor2& hidden_pre);
  BatchResult finish(const Tensor2& logits, std::span<const int> labels, Tensor2* d_logits) const;

  int embed_dim_ = 0;
  int repr_dim_ = 0;
  int head_input_dim_ = 0;
  int logit_dim_ = 0;
};

}  // namespace swem
