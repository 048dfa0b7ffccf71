#include "swem/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "swem/common.hpp"
#include "swem/layers.hpp"

namespace swem {

EncoderVariant parse_encoder_variant(const std::string& name) {
  if (name == "aver" || name == "average") return EncoderVariant::kAverage;
  if (name == "max") return EncoderVariant::kMax;
  if (name == "concat") return EncoderVariant::kConcat;
  if (name == "hier") return EncoderVariant::kHier;
  if (name == "cnn") return EncoderVariant::kCnn;
  throw ConfigError("unknown encoder variant '" + name + "' (expected aver|max|concat|hier|cnn)");
}

std::string to_string(EncoderVariant variant) {
  switch (variant) {
    case EncoderVariant::kAverage: return "aver";
    case EncoderVariant::kMax: return "max";
    case EncoderVariant::kConcat: return "concat";
    case EncoderVariant::kHier: return "hier";
    case EncoderVariant::kCnn: return "cnn";
  }
  return "?";
}

int EncoderConfig::output_dim(int embedding_dim) const {
  switch (variant) {
    case EncoderVariant::kAverage:
    case EncoderVariant::kMax:
    case EncoderVariant::kHier:
      return embedding_dim;
    case EncoderVariant::kConcat:
      return 2 * embedding_dim;
    case EncoderVariant::kCnn:
      return cnn_filters * static_cast<int>(cnn_widths.size());
  }
  return 0;
}

long long compositional_param_count(const EncoderConfig& config, int embedding_dim) {
  if (config.variant != EncoderVariant::kCnn) return 0;
  long long total = 0;
  for (int width : config.cnn_widths) {
    total += static_cast<long long>(width) * embedding_dim * config.cnn_filters;
  }
  return total;
}

namespace {

void check_lengths(const TokenBatch& batch, const char* op) {
  for (int len : batch.lengths) {
    if (len < 1) throw DataError(std::string(op) + ": zero-length sequence");
  }
}

}  // namespace

Tensor2 pool_average(const Tensor3& embedded, const TokenBatch& batch) {
  check_lengths(batch, "pool_average");
  const int dim = embedded.dim2;
  Tensor2 z(batch.batch, dim);
  std::vector<NeumaierAcc> acc(dim);
  for (int i = 0; i < batch.batch; ++i) {
    std::fill(acc.begin(), acc.end(), NeumaierAcc{});
    const int len = batch.lengths[i];
    for (int j = 0; j < len; ++j) {
      const Real* v = embedded.slice_ptr(i, j);
      for (int k = 0; k < dim; ++k) acc[k].add(v[k]);
    }
    Real* out = z.row_ptr(i);
    for (int k = 0; k < dim; ++k) out[k] = acc[k].result() / len;
  }
  return z;
}

void pool_average_backward(const Tensor2& upstream, const TokenBatch& batch, Tensor3& d_embedded) {
  const int dim = d_embedded.dim2;
  for (int i = 0; i < batch.batch; ++i) {
    const int len = batch.lengths[i];
    const Real* up = upstream.row_ptr(i);
    for (int j = 0; j < len; ++j) {
      Real* dv = d_embedded.slice_ptr(i, j);
      for (int k = 0; k < dim; ++k) dv[k] += up[k] / len;
    }
  }
}

Tensor2 pool_max(const Tensor3& embedded, const TokenBatch& batch, MaxPoolCache* cache) {
  check_lengths(batch, "pool_max");
  const int dim = embedded.dim2;
  Tensor2 z(batch.batch, dim);
  if (cache) cache->argmax.assign(static_cast<std::size_t>(batch.batch) * dim, 0);
  for (int i = 0; i < batch.batch; ++i) {
    const int len = batch.lengths[i];
    Real* out = z.row_ptr(i);
    const Real* first = embedded.slice_ptr(i, 0);
    std::copy(first, first + dim, out);
    for (int j = 1; j < len; ++j) {
      const Real* v = embedded.slice_ptr(i, j);
      for (int k = 0; k < dim; ++k) {
        if (v[k] > out[k]) {
          out[k] = v[k];
          if (cache) cache->argmax[static_cast<std::size_t>(i) * dim + k] = j;
        }
      }
    }
  }
  return z;
}

void pool_max_backward(const Tensor2& upstream, const MaxPoolCache& cache, const TokenBatch& batch,
                       Tensor3& d_embedded) {
  const int dim = d_embedded.dim2;
  for (int i = 0; i < batch.batch; ++i) {
    const Real* up = upstream.row_ptr(i);
    for (int k = 0; k < dim; ++k) {
      const int j = cache.argmax[static_cast<std::size_t>(i) * dim + k];
      d_embedded(i, j, k) += up[k];
    }
  }
}

Tensor2 pool_concat(const Tensor3& embedded, const TokenBatch& batch, MaxPoolCache* cache) {
  const Tensor2 avg = pool_average(embedded, batch);
  const Tensor2 mx = pool_max(embedded, batch, cache);
  const int dim = embedded.dim2;
  Tensor2 z(batch.batch, 2 * dim);
  for (int i = 0; i < batch.batch; ++i) {
    Real* out = z.row_ptr(i);
    std::copy(avg.row_ptr(i), avg.row_ptr(i) + dim, out);
    std::copy(mx.row_ptr(i), mx.row_ptr(i) + dim, out + dim);
  }
  return z;
}

void pool_concat_backward(const Tensor2& upstream, const MaxPoolCache& cache, const TokenBatch& batch,
                          Tensor3& d_embedded) {
  const int dim = d_embedded.dim2;
  Tensor2 up_avg(batch.batch, dim);
  Tensor2 up_max(batch.batch, dim);
  for (int i = 0; i < batch.batch; ++i) {
    const Real* up = upstream.row_ptr(i);
    std::copy(up, up + dim, up_avg.row_ptr(i));
    std::copy(up + dim, up + 2 * dim, up_max.row_ptr(i));
  }
  pool_average_backward(up_avg, batch, d_embedded);
  pool_max_backward(up_max, cache, batch, d_embedded);
}

Tensor2 pool_hier(const Tensor3& embedded, const TokenBatch& batch, int window,
                  HierPoolCache* cache) {
  if (window < 1) throw ConfigError("hierarchical pooling window must be >= 1");
  check_lengths(batch, "pool_hier");
  const int dim = embedded.dim2;
  Tensor2 z(batch.batch, dim);
  if (cache) {
    cache->arg_window.assign(static_cast<std::size_t>(batch.batch) * dim, 0);
    cache->window_len.assign(batch.batch, 0);
  }
  std::vector<NeumaierAcc> acc(dim);
  std::vector<Real> mean(dim);
  for (int i = 0; i < batch.batch; ++i) {
    const int len = batch.lengths[i];
    const int n = std::min(window, len);  // short sequences: one whole window
    const int num_windows = len - n + 1;
    if (cache) cache->window_len[i] = n;
    Real* out = z.row_ptr(i);
    for (int w = 0; w < num_windows; ++w) {
      std::fill(acc.begin(), acc.end(), NeumaierAcc{});
      for (int j = w; j < w + n; ++j) {
        const Real* v = embedded.slice_ptr(i, j);
        for (int k = 0; k < dim; ++k) acc[k].add(v[k]);
      }
      for (int k = 0; k < dim; ++k) mean[k] = acc[k].result() / n;
      if (w == 0) {
        std::copy(mean.begin(), mean.end(), out);
      } else {
        for (int k = 0; k < dim; ++k) {
          if (mean[k] > out[k]) {
            out[k] = mean[k];
            if (cache) cache->arg_window[static_cast<std::size_t>(i) * dim + k] = w;
          }
        }
      }
    }
  }
  return z;
}

void pool_hier_backward(const Tensor2& upstream, const HierPoolCache& cache, const TokenBatch& batch,
                        int window, Tensor3& d_embedded) {
  (void)window;
  const int dim = d_embedded.dim2;
  for (int i = 0; i < batch.batch; ++i) {
    const int n = cache.window_len[i];
    const Real* up = upstream.row_ptr(i);
    for (int k = 0; k < dim; ++k) {
      const int w = cache.arg_window[static_cast<std::size_t>(i) * dim + k];
      const Real share = up[k] / n;
      for (int j = w; j < w + n; ++j) d_embedded(i, j, k) += share;
    }
  }
}

std::string cnn_weight_name(int width) { return "cnn/w" + std::to_string(width); }
std::string cnn_bias_name(int width) { return "cnn/b" + std::to_string(width); }

void cnn_register_params(const EncoderConfig& config, int embedding_dim, ParameterStore& store,
                         Rng& rng) {
  if (config.cnn_filters < 1) throw ConfigError("cnn_filters must be >= 1");
  if (config.cnn_widths.empty()) throw ConfigError("cnn_widths must not be empty");
  for (int width : config.cnn_widths) {
    if (width < 1) throw ConfigError("cnn filter width must be >= 1");
    const int fan_in = width * embedding_dim;
    const int fan_out = config.cnn_filters;
    Tensor2& w = store.create(cnn_weight_name(width), fan_in, fan_out);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (Real& v : w.data) v = rng.uniform(-limit, limit);
    store.create(cnn_bias_name(width), 1, fan_out);
  }
}

Tensor2 cnn_encode(const Tensor3& embedded, const TokenBatch& batch, const EncoderConfig& config,
                   const ParameterStore& store, CnnCache* cache) {
  check_lengths(batch, "cnn_encode");
  const int dim = embedded.dim2;
  const int filters = config.cnn_filters;
  const int num_widths = static_cast<int>(config.cnn_widths.size());
  Tensor2 z(batch.batch, filters * num_widths);
  if (cache) cache->per_width.assign(num_widths, CnnWidthCache{});

  for (int wi = 0; wi < num_widths; ++wi) {
    const int width = config.cnn_widths[wi];
    const Tensor2& w = store.value(cnn_weight_name(width));
    const Tensor2& b = store.value(cnn_bias_name(width));

    std::vector<int> offsets(batch.batch + 1, 0);
    for (int i = 0; i < batch.batch; ++i) {
      const int positions = std::max(batch.lengths[i] - width + 1, 1);
      offsets[i + 1] = offsets[i] + positions;
    }
    const int total = offsets[batch.batch];

    // im2col: one row per (sequence, position); windows running past the end
    // of a short sequence stay zero.
    Tensor2 windows(total, width * dim);
    for (int i = 0; i < batch.batch; ++i) {
      const int len = batch.lengths[i];
      for (int row = offsets[i]; row < offsets[i + 1]; ++row) {
        const int t = row - offsets[i];
        Real* dst = windows.row_ptr(row);
        for (int u = 0; u < width; ++u) {
          if (t + u < len) {
            const Real* src = embedded.slice_ptr(i, t + u);
            std::copy(src, src + dim, dst + static_cast<std::size_t>(u) * dim);
          }
        }
      }
    }

    Tensor2 feature = affine_forward(windows, w, b);
    relu_forward_inplace(feature.data);

    // Max-over-time per filter; first position wins ties.
    for (int i = 0; i < batch.batch; ++i) {
      Real* out = z.row_ptr(i) + static_cast<std::size_t>(wi) * filters;
      const Real* first = feature.row_ptr(offsets[i]);
      std::copy(first, first + filters, out);
      std::vector<int> arg(filters, offsets[i]);
      for (int row = offsets[i] + 1; row < offsets[i + 1]; ++row) {
        const Real* f = feature.row_ptr(row);
        for (int k = 0; k < filters; ++k) {
          if (f[k] > out[k]) {
            out[k] = f[k];
            arg[k] = row;
          }
        }
      }
      if (cache) {
        auto& wc = cache->per_width[wi];
        if (wc.argmax.empty()) wc.argmax.assign(static_cast<std::size_t>(batch.batch) * filters, 0);
        std::copy(arg.begin(), arg.end(), wc.argmax.begin() + static_cast<std::size_t>(i) * filters);
      }
    }
    if (cache) {
      auto& wc = cache->per_width[wi];
      wc.windows = std::move(windows);
      wc.activations = std::move(feature);
      wc.offsets = std::move(offsets);
    }
  }
  return z;
}

void cnn_encode_backward(const Tensor2& upstream, const TokenBatch& batch,
                         const EncoderConfig& config, ParameterStore& store, const CnnCache& cache,
                         Tensor3& d_embedded) {
  const int dim = d_embedded.dim2;
  const int filters = config.cnn_filters;
  for (std::size_t wi = 0; wi < config.cnn_widths.size(); ++wi) {
    const int width = config.cnn_widths[wi];
    const auto& wc = cache.per_width[wi];
    const Tensor2& w = store.value(cnn_weight_name(width));

    // Route the pooled gradient to the winning positions, gated by ReLU.
    Tensor2 d_feature(wc.activations.rows, filters);
    for (int i = 0; i < batch.batch; ++i) {
      const Real* up = upstream.row_ptr(i) + wi * filters;
      for (int k = 0; k < filters; ++k) {
        const int row = wc.argmax[static_cast<std::size_t>(i) * filters + k];
        if (wc.activations(row, k) > 0.0) d_feature(row, k) += up[k];
      }
    }

    AffineGrads ag = affine_backward(d_feature, wc.windows, w);
    auto& w_grad = store.grad(cnn_weight_name(width));
    auto& b_grad = store.grad(cnn_bias_name(width));
    for (std::size_t i = 0; i < ag.grad_w.data.size(); ++i) w_grad.data[i] += ag.grad_w.data[i];
    for (std::size_t i = 0; i < ag.grad_b.data.size(); ++i) b_grad.data[i] += ag.grad_b.data[i];

    // Scatter window gradients back to the embedded tensor (zero-padded
    // slots of short sequences receive nothing).
    for (int i = 0; i < batch.batch; ++i) {
      const int len = batch.lengths[i];
      for (int row = wc.offsets[i]; row < wc.offsets[i + 1]; ++row) {
        const int t = row - wc.offsets[i];
        const Real* src = ag.grad_x.row_ptr(row);
        for (int u = 0; u < width; ++u) {
          if (t + u < len) {
            Real* dst = d_embedded.slice_ptr(i, t + u);
            const Real* s = src + static_cast<std::size_t>(u) * dim;
            for (int k = 0; k < dim; ++k) dst[k] += s[k];
          }
        }
      }
    }
  }
}

Tensor2 encode(const Tensor3& embedded, const TokenBatch& batch, const EncoderConfig& config,
               const ParameterStore& store, EncoderCache* cache) {
  switch (config.variant) {
    case EncoderVariant::kAverage:
      return pool_average(embedded, batch);
    case EncoderVariant::kMax:
      return pool_max(embedded, batch, cache ? &cache->max_cache : nullptr);
    case EncoderVariant::kConcat:
      return pool_concat(embedded, batch, cache ? &cache->max_cache : nullptr);
    case EncoderVariant::kHier:
      return pool_hier(embedded, batch, config.hier_window, cache ? &cache->hier_cache : nullptr);
    case EncoderVariant::kCnn:
      return cnn_encode(embedded, batch, config, store, cache ? &cache->cnn_cache : nullptr);
  }
  throw ConfigError("encode: unknown variant");
}

void encode_backward(const Tensor2& upstream, const TokenBatch& batch, const EncoderConfig& config,
                     ParameterStore& store, const EncoderCache& cache, Tensor3& d_embedded) {
  switch (config.variant) {
    case EncoderVariant::kAverage:
      pool_average_backward(upstream, batch, d_embedded);
      return;
    case EncoderVariant::kMax:
      pool_max_backward(upstream, cache.max_cache, batch, d_embedded);
      return;
    case EncoderVariant::kConcat:
      pool_concat_backward(upstream, cache.max_cache, batch, d_embedded);
      return;
    case EncoderVariant::kHier:
      pool_hier_backward(upstream, cache.hier_cache, batch, config.hier_window, d_embedded);
      return;
    case EncoderVariant::kCnn:
      cnn_encode_backward(upstream, batch, config, store, cache.cnn_cache, d_embedded);
      return;
  }
}

}  // namespace swem
