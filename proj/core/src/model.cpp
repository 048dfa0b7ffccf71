#include "swem/model.hpp"

#include <cmath>

#include "swem/common.hpp"

namespace swem {

namespace {

constexpr const char* kTable = "embedding/table";
constexpr const char* kRefineW = "embedding/refine_w";
constexpr const char* kRefineB = "embedding/refine_b";
constexpr const char* kHeadW1 = "head/w1";
constexpr const char* kHeadB1 = "head/b1";
constexpr const char* kHeadW2 = "head/w2";
constexpr const char* kHeadB2 = "head/b2";
constexpr const char* kHeadW = "head/w";
constexpr const char* kHeadB = "head/b";

void glorot_init(Tensor2& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / (w.rows + w.cols));
  for (Real& v : w.data) v = rng.uniform(-limit, limit);
}

void scale_inplace(std::vector<Real>& values, std::span<const Real> mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < values.size(); ++i) values[i] *= mask[i];
}

}  // namespace

HeadKind parse_head_kind(const std::string& name) {
  if (name == "mlp") return HeadKind::kMlp;
  if (name == "linear") return HeadKind::kLinear;
  throw ConfigError("unknown head kind '" + name + "' (expected mlp|linear)");
}

std::string to_string(HeadKind kind) { return kind == HeadKind::kMlp ? "mlp" : "linear"; }

Tensor2 pair_combine(const Tensor2& z1, const Tensor2& z2) {
  if (!z1.same_shape(z2)) {
    throw ConfigError("pair_combine: branch shapes differ: " + z1.shape_str() + " vs " +
                      z2.shape_str());
  }
  const int b = z1.rows;
  const int d = z1.cols;
  Tensor2 combined(b, 4 * d);
  for (int i = 0; i < b; ++i) {
    const Real* a = z1.row_ptr(i);
    const Real* c = z2.row_ptr(i);
    Real* out = combined.row_ptr(i);
    for (int k = 0; k < d; ++k) {
      out[k] = a[k];
      out[d + k] = c[k];
      out[2 * d + k] = std::abs(a[k] - c[k]);
      out[3 * d + k] = a[k] * c[k];
    }
  }
  return combined;
}

void pair_combine_backward(const Tensor2& upstream, const Tensor2& z1, const Tensor2& z2,
                           Tensor2& d_z1, Tensor2& d_z2) {
  const int b = z1.rows;
  const int d = z1.cols;
  d_z1 = Tensor2(b, d);
  d_z2 = Tensor2(b, d);
  for (int i = 0; i < b; ++i) {
    const Real* a = z1.row_ptr(i);
    const Real* c = z2.row_ptr(i);
    const Real* up = upstream.row_ptr(i);
    Real* g1 = d_z1.row_ptr(i);
    Real* g2 = d_z2.row_ptr(i);
    for (int k = 0; k < d; ++k) {
      const Real diff = a[k] - c[k];
      const Real sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      g1[k] = up[k] + sign * up[2 * d + k] + c[k] * up[3 * d + k];
      g2[k] = up[d + k] - sign * up[2 * d + k] + a[k] * up[3 * d + k];
    }
  }
}

struct Model::EncodeState {
  EmbedCache embed_cache;
  std::vector<Real> embed_mask;  // empty means identity
  Tensor3 embedded;              // post-dropout, what the encoder saw
  EncoderCache encoder_cache;
};

Model Model::build(const ModelSpec& spec, const Tensor2& initial_table, Rng rng) {
  if (spec.num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (spec.binary_sigmoid && spec.num_classes != 2) {
    throw ConfigError("binary_sigmoid requires num_classes == 2");
  }
  if (spec.dropout_rate < 0.0 || spec.dropout_rate >= 1.0) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
  if (spec.embedding_mode == EmbeddingMode::kAuto) {
    throw ConfigError("embedding mode 'auto' must be resolved before building a model");
  }
  Model model;
  model.spec = spec;
  model.embed_dim_ = initial_table.cols;
  model.repr_dim_ = spec.encoder.output_dim(model.embed_dim_);
  model.head_input_dim_ = spec.pair_model ? 4 * model.repr_dim_ : model.repr_dim_;
  model.logit_dim_ = spec.binary_sigmoid ? 1 : spec.num_classes;

  const bool refined = spec.embedding_mode == EmbeddingMode::kMlpRefined;
  const bool table_trainable = !refined && spec.embedding_trainable;
  Tensor2& table = model.store.create(kTable, initial_table.rows, initial_table.cols, table_trainable);
  table = initial_table;
  if (refined) {
    Rng refine_rng = rng.split("refine");
    Tensor2& w1 = model.store.create(kRefineW, model.embed_dim_, model.embed_dim_);
    glorot_init(w1, refine_rng);
    model.store.create(kRefineB, 1, model.embed_dim_);
  }
  if (spec.encoder.variant == EncoderVariant::kCnn) {
    Rng cnn_rng = rng.split("cnn");
    cnn_register_params(spec.encoder, model.embed_dim_, model.store, cnn_rng);
  }
  Rng head_rng = rng.split("head");
  if (spec.head.kind == HeadKind::kMlp) {
    if (spec.head.hidden_dim < 1) throw ConfigError("head hidden_dim must be >= 1");
    Tensor2& w1 = model.store.create(kHeadW1, model.head_input_dim_, spec.head.hidden_dim);
    glorot_init(w1, head_rng);
    model.store.create(kHeadB1, 1, spec.head.hidden_dim);
    Tensor2& w2 = model.store.create(kHeadW2, spec.head.hidden_dim, model.logit_dim_);
    glorot_init(w2, head_rng);
    model.store.create(kHeadB2, 1, model.logit_dim_);
  } else {
    Tensor2& w = model.store.create(kHeadW, model.head_input_dim_, model.logit_dim_);
    glorot_init(w, head_rng);
    model.store.create(kHeadB, 1, model.logit_dim_);
  }
  return model;
}

Tensor2 Model::encode_sequences(const TokenBatch& batch, bool training, Rng& dropout_rng,
                                EncodeState* state) const {
  const Tensor2& table = store.value(kTable);
  const bool refined = spec.embedding_mode == EmbeddingMode::kMlpRefined;
  const Tensor2* w1 = refined ? &store.value(kRefineW) : nullptr;
  const Tensor2* b1 = refined ? &store.value(kRefineB) : nullptr;

  Tensor3 embedded = embed_forward(batch, table, w1, b1, state ? &state->embed_cache : nullptr);
  if (training && spec.dropout_rate > 0.0) {
    DropoutResult dr = dropout_forward(embedded.data, spec.dropout_rate, dropout_rng, training);
    embedded.data = std::move(dr.out);
    if (state) state->embed_mask = std::move(dr.mask);
  } else if (state) {
    state->embed_mask.clear();
  }
  Tensor2 z = encode(embedded, batch, spec.encoder, store, state ? &state->encoder_cache : nullptr);
  if (state) state->embedded = std::move(embedded);
  return z;
}

void Model::encode_sequences_backward(const Tensor2& d_repr, const TokenBatch& batch,
                                      EncodeState& state) {
  Tensor3 d_embedded(batch.batch, batch.max_len, embed_dim_);
  encode_backward(d_repr, batch, spec.encoder, store, state.encoder_cache, d_embedded);
  scale_inplace(d_embedded.data, state.embed_mask);

  const bool refined = spec.embedding_mode == EmbeddingMode::kMlpRefined;
  EmbedGrads grads;
  if (store.entry(kTable).trainable) grads.table_grad = &store.grad(kTable);
  const Tensor2* w1 = nullptr;
  if (refined) {
    w1 = &store.value(kRefineW);
    grads.w1_grad = &store.grad(kRefineW);
    grads.b1_grad = &store.grad(kRefineB);
  }
  embed_backward(d_embedded, batch, w1, state.embed_cache, grads);
}

Tensor2 Model::head_forward(const Tensor2& input, Tensor2* hidden_pre) const {
  if (spec.head.kind == HeadKind::kMlp) {
    Tensor2 pre = affine_forward(input, store.value(kHeadW1), store.value(kHeadB1));
    if (hidden_pre) *hidden_pre = pre;
    const Tensor2 hidden = relu_forward(pre);
    return affine_forward(hidden, store.value(kHeadW2), store.value(kHeadB2));
  }
  return affine_forward(input, store.value(kHeadW), store.value(kHeadB));
}

Tensor2 Model::head_backward(const Tensor2& d_logits, const Tensor2& input,
                             const Tensor2& hidden_pre) {
  auto accumulate = [](const Tensor2& src, Tensor2& dst) {
    for (std::size_t i = 0; i < src.data.size(); ++i) dst.data[i] += src.data[i];
  };
  if (spec.head.kind == HeadKind::kMlp) {
    const Tensor2 hidden = relu_forward(hidden_pre);
    AffineGrads top = affine_backward(d_logits, hidden, store.value(kHeadW2));
    accumulate(top.grad_w, store.grad(kHeadW2));
    accumulate(top.grad_b, store.grad(kHeadB2));
    const Tensor2 d_pre = relu_backward(top.grad_x, hidden_pre);
    AffineGrads bottom = affine_backward(d_pre, input, store.value(kHeadW1));
    accumulate(bottom.grad_w, store.grad(kHeadW1));
    accumulate(bottom.grad_b, store.grad(kHeadB1));
    return std::move(bottom.grad_x);
  }
  AffineGrads g = affine_backward(d_logits, input, store.value(kHeadW));
  accumulate(g.grad_w, store.grad(kHeadW));
  accumulate(g.grad_b, store.grad(kHeadB));
  return std::move(g.grad_x);
}

Model::BatchResult Model::finish(const Tensor2& logits, std::span<const int> labels,
                                 Tensor2* d_logits) const {
  BatchResult result;
  result.predictions.resize(logits.rows);
  if (spec.binary_sigmoid) {
    SigmoidBceResult r = sigmoid_binary_cross_entropy(logits, labels);
    result.loss = r.loss;
    result.row_loss = std::move(r.row_loss);
    for (int i = 0; i < logits.rows; ++i) result.predictions[i] = logits(i, 0) > 0.0 ? 1 : 0;
    if (d_logits) *d_logits = std::move(r.grad_logits);
  } else {
    SoftmaxXentResult r = softmax_cross_entropy(logits, labels);
    result.loss = r.loss;
    result.row_loss = std::move(r.row_loss);
    for (int i = 0; i < logits.rows; ++i) {
      const Real* row = logits.row_ptr(i);
      int best = 0;
      for (int j = 1; j < logits.cols; ++j) {
        if (row[j] > row[best]) best = j;
      }
      result.predictions[i] = best;
    }
    if (d_logits) *d_logits = std::move(r.grad_logits);
  }
  return result;
}

Model::BatchResult Model::classify(const TokenBatch& batch, std::span<const int> labels,
                                   bool training, Rng rng, bool with_grad) {
  if (spec.pair_model) throw ConfigError("classify called on a pair-matching model");
  EncodeState state;
  Rng embed_rng = rng.split("embed-drop");
  Rng repr_rng = rng.split("repr-drop");
  Tensor2 z = encode_sequences(batch, training, embed_rng, &state);

  DropoutResult zdrop = dropout_forward(z.data, spec.dropout_rate, repr_rng, training);
  Tensor2 z_dropped(z.rows, z.cols);
  z_dropped.data = std::move(zdrop.out);

  Tensor2 hidden_pre;
  const Tensor2 logits = head_forward(z_dropped, &hidden_pre);

  Tensor2 d_logits;
  BatchResult result = finish(logits, labels, with_grad ? &d_logits : nullptr);
  if (with_grad) {
    Tensor2 d_zdrop = head_backward(d_logits, z_dropped, hidden_pre);
    scale_inplace(d_zdrop.data, zdrop.mask);
    encode_sequences_backward(d_zdrop, batch, state);
  }
  return result;
}

Model::BatchResult Model::match(const TokenBatch& first, const TokenBatch& second,
                                std::span<const int> labels, bool training, Rng rng, bool with_grad) {
  if (!spec.pair_model) throw ConfigError("match called on a single-sequence model");
  if (first.batch != second.batch) throw ConfigError("pair batches differ in size");
  EncodeState s1;
  EncodeState s2;
  Rng rng1 = rng.split("embed-drop-1");
  Rng rng2 = rng.split("embed-drop-2");
  Rng repr_rng = rng.split("repr-drop");
  const Tensor2 z1 = encode_sequences(first, training, rng1, &s1);
  const Tensor2 z2 = encode_sequences(second, training, rng2, &s2);
  Tensor2 combined = pair_combine(z1, z2);

  DropoutResult cdrop = dropout_forward(combined.data, spec.dropout_rate, repr_rng, training);
  Tensor2 combined_dropped(combined.rows, combined.cols);
  combined_dropped.data = std::move(cdrop.out);

  Tensor2 hidden_pre;
  const Tensor2 logits = head_forward(combined_dropped, &hidden_pre);

  Tensor2 d_logits;
  BatchResult result = finish(logits, labels, with_grad ? &d_logits : nullptr);
  if (with_grad) {
    Tensor2 d_combined = head_backward(d_logits, combined_dropped, hidden_pre);
    scale_inplace(d_combined.data, cdrop.mask);
    Tensor2 d_z1;
    Tensor2 d_z2;
    pair_combine_backward(d_combined, z1, z2, d_z1, d_z2);
    encode_sequences_backward(d_z1, first, s1);
    encode_sequences_backward(d_z2, second, s2);
  }
  return result;
}

Tensor2 Model::represent(const TokenBatch& batch) const {
  Rng unused(0);
  return encode_sequences(batch, /*training=*/false, unused, nullptr);
}

EmbeddingMatrix Model::embedding_snapshot() const {
  EmbeddingMatrix out;
  out.table = store.value(kTable);
  out.dim = embed_dim_;
  out.trainable = store.entry(kTable).trainable;
  if (spec.embedding_mode == EmbeddingMode::kMlpRefined) {
    out.refinement = RefinementParams{store.value(kRefineW), store.value(kRefineB)};
  }
  return out;
}

long long Model::compositional_params() const {
  return compositional_param_count(spec.encoder, embed_dim_);
}

}  // namespace swem
