#pragma once

#include <string>
#include <vector>

#include "swem/embedding.hpp"
#include "swem/parameter_store.hpp"
#include "swem/rng.hpp"
#include "swem/tensor.hpp"

namespace swem {

enum class EncoderVariant { kAverage, kMax, kConcat, kHier, kCnn };

EncoderVariant parse_encoder_variant(const std::string& name);
std::string to_string(EncoderVariant variant);

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::kConcat;
  int hier_window = 5;                      // hier only
  std::vector<int> cnn_widths = {3, 4, 5};  // cnn only
  int cnn_filters = 100;                    // filters per width

  // Dimension of the sequence representation for embedding dim K.
  int output_dim(int embedding_dim) const;
};

// Number of compositional parameters: zero for every pooling variant, and
// sum(width * K * filters) for the convolutional encoder. Biases are tracked
// separately by the parameter registry.
long long compositional_param_count(const EncoderConfig& config, int embedding_dim);

// ---- Pooling operations ------------------------------------------------

// z[i] = mean of the valid word vectors of sequence i.
Tensor2 pool_average(const Tensor3& embedded, const TokenBatch& batch);
void pool_average_backward(const Tensor2& upstream, const TokenBatch& batch, Tensor3& d_embedded);

struct MaxPoolCache {
  std::vector<int> argmax;  // [batch x K]: position of the (first) max
};
// z[i,k] = max over valid positions; ties resolve to the first position.
Tensor2 pool_max(const Tensor3& embedded, const TokenBatch& batch, MaxPoolCache* cache = nullptr);
void pool_max_backward(const Tensor2& upstream, const MaxPoolCache& cache, const TokenBatch& batch,
                       Tensor3& d_embedded);

// z = [average ; max], dimension 2K.
Tensor2 pool_concat(const Tensor3& embedded, const TokenBatch& batch, MaxPoolCache* cache = nullptr);
void pool_concat_backward(const Tensor2& upstream, const MaxPoolCache& cache, const TokenBatch& batch,
                          Tensor3& d_embedded);

struct HierPoolCache {
  std::vector<int> arg_window;  // [batch x K]: window whose mean won the max
  std::vector<int> window_len;  // [batch]: n, or L when L < n
};
// Mean over each length-n window (stride 1), then elementwise max over
// windows. A sequence shorter than n is one whole-sequence window.
Tensor2 pool_hier(const Tensor3& embedded, const TokenBatch& batch, int window,
                  HierPoolCache* cache = nullptr);
void pool_hier_backward(const Tensor2& upstream, const HierPoolCache& cache, const TokenBatch& batch,
                        int window, Tensor3& d_embedded);

// ---- Convolutional encoder ----------------------------------------------

// Parameter names used in a ParameterStore ("cnn/w3", "cnn/b3", ...).
std::string cnn_weight_name(int width);
std::string cnn_bias_name(int width);

// Registers and initializes the filter banks (Glorot-uniform weights, zero
// biases) for every configured width.
void cnn_register_params(const EncoderConfig& config, int embedding_dim, ParameterStore& store,
                         Rng& rng);

struct CnnWidthCache {
  Tensor2 windows;            // [total_positions x width*K] im2col matrix
  Tensor2 activations;        // [total_positions x filters] post-ReLU
  std::vector<int> offsets;   // start row per sequence, size batch+1
  std::vector<int> argmax;    // [batch x filters]: winning position row
};
struct CnnCache {
  std::vector<CnnWidthCache> per_width;
};

// For each width: ReLU(window . W + b) feature maps over valid positions
// (sequences shorter than the width are zero-padded on the right), then
// max-over-time per filter; outputs concatenated across widths.
Tensor2 cnn_encode(const Tensor3& embedded, const TokenBatch& batch, const EncoderConfig& config,
                   const ParameterStore& store, CnnCache* cache = nullptr);
void cnn_encode_backward(const Tensor2& upstream, const TokenBatch& batch,
                         const EncoderConfig& config, ParameterStore& store, const CnnCache& cache,
                         Tensor3& d_embedded);

// ---- Uniform dispatch ----------------------------------------------------

struct EncoderCache {
  MaxPoolCache max_cache;
  HierPoolCache hier_cache;
  CnnCache cnn_cache;
};

Tensor2 encode(const Tensor3& embedded, const TokenBatch& batch, const EncoderConfig& config,
               const ParameterStore& store, EncoderCache* cache);
void encode_backward(const Tensor2& upstream, const TokenBatch& batch, const EncoderConfig& config,
                     ParameterStore& store, const EncoderCache& cache, Tensor3& d_embedded);

}  // namespace swem
