#include "swem/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "swem/common.hpp"

namespace swem {

Tensor2 affine_forward(const Tensor2& x, const Tensor2& w, const Tensor2& b) {
  if (x.cols != w.rows || b.rows != 1 || b.cols != w.cols) {
    throw ConfigError("affine_forward: shapes do not conform: x" + x.shape_str() + " W" +
                      w.shape_str() + " b" + b.shape_str());
  }
  Tensor2 out = matmul(x, w);
  for (int i = 0; i < out.rows; ++i) {
    Real* row = out.row_ptr(i);
    for (int j = 0; j < out.cols; ++j) row[j] += b(0, j);
  }
  return out;
}

AffineGrads affine_backward(const Tensor2& upstream, const Tensor2& x, const Tensor2& w) {
  if (upstream.rows != x.rows || upstream.cols != w.cols || x.cols != w.rows) {
    throw ConfigError("affine_backward: shapes do not conform: upstream" + upstream.shape_str() +
                      " x" + x.shape_str() + " W" + w.shape_str());
  }
  AffineGrads g;
  g.grad_x = matmul_nt(upstream, w);   // dL/dx = upstream . W^T
  g.grad_w = matmul_tn(x, upstream);   // dL/dW = x^T . upstream
  g.grad_b = Tensor2(1, w.cols);
  for (int i = 0; i < upstream.rows; ++i) {
    const Real* row = upstream.row_ptr(i);
    for (int j = 0; j < upstream.cols; ++j) g.grad_b(0, j) += row[j];
  }
  return g;
}

Tensor2 relu_forward(const Tensor2& x) {
  Tensor2 out = x;
  for (Real& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

void relu_forward_inplace(std::span<Real> x) {
  for (Real& v : x) v = v > 0.0 ? v : 0.0;
}

Tensor2 relu_backward(const Tensor2& upstream, const Tensor2& x) {
  if (!upstream.same_shape(x)) {
    throw ConfigError("relu_backward: shapes do not conform: " + upstream.shape_str() + " vs " +
                      x.shape_str());
  }
  Tensor2 out = upstream;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (x.data[i] <= 0.0) out.data[i] = 0.0;
  }
  return out;
}

Tensor2 softmax(const Tensor2& logits) {
  Tensor2 out(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    const Real* in = logits.row_ptr(i);
    Real* o = out.row_ptr(i);
    Real mx = in[0];
    for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, in[j]);
    Real denom = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      denom += o[j];
    }
    for (int j = 0; j < logits.cols; ++j) o[j] /= denom;
  }
  return out;
}

SoftmaxXentResult softmax_cross_entropy(const Tensor2& logits, std::span<const int> labels) {
  if (static_cast<int>(labels.size()) != logits.rows) {
    throw ConfigError("softmax_cross_entropy: got " + std::to_string(labels.size()) +
                      " labels for " + std::to_string(logits.rows) + " rows");
  }
  const int batch = logits.rows;
  const int classes = logits.cols;
  SoftmaxXentResult res;
  res.grad_logits = Tensor2(batch, classes);
  res.row_loss.resize(batch);
  double total = 0.0;
  for (int i = 0; i < batch; ++i) {
    const int label = labels[i];
    if (label < 0 || label >= classes) {
      throw DataError("softmax_cross_entropy: label " + std::to_string(label) + " out of range [0," +
                      std::to_string(classes) + ") at row " + std::to_string(i));
    }
    const Real* in = logits.row_ptr(i);
    Real mx = in[0];
    for (int j = 1; j < classes; ++j) mx = std::max(mx, in[j]);
    double denom = 0.0;
    for (int j = 0; j < classes; ++j) denom += std::exp(in[j] - mx);
    const double log_denom = std::log(denom);
    const double nll = -(in[label] - mx - log_denom);
    res.row_loss[i] = nll;
    total += nll;
    Real* g = res.grad_logits.row_ptr(i);
    for (int j = 0; j < classes; ++j) {
      const double p = std::exp(in[j] - mx) / denom;
      g[j] = (p - (j == label ? 1.0 : 0.0)) / batch;
    }
  }
  res.loss = total / batch;
  return res;
}

SigmoidBceResult sigmoid_binary_cross_entropy(const Tensor2& logits, std::span<const int> labels) {
  if (logits.cols != 1) {
    throw ConfigError("sigmoid_binary_cross_entropy: logits must be [B x 1], got " +
                      logits.shape_str());
  }
  if (static_cast<int>(labels.size()) != logits.rows) {
    throw ConfigError("sigmoid_binary_cross_entropy: label count mismatch");
  }
  const int batch = logits.rows;
  SigmoidBceResult res;
  res.grad_logits = Tensor2(batch, 1);
  res.row_loss.resize(batch);
  double total = 0.0;
  for (int i = 0; i < batch; ++i) {
    const int y = labels[i];
    if (y != 0 && y != 1) {
      throw DataError("sigmoid_binary_cross_entropy: non-binary label " + std::to_string(y) +
                      " at row " + std::to_string(i));
    }
    const double z = logits(i, 0);
    // max(z,0) - z*y + log(1 + exp(-|z|)) is the stable BCE-with-logits form.
    const double nll = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    res.row_loss[i] = nll;
    total += nll;
    const double sig = 1.0 / (1.0 + std::exp(-z));
    res.grad_logits(i, 0) = (sig - y) / batch;
  }
  res.loss = total / batch;
  return res;
}

DropoutResult dropout_forward(std::span<const Real> x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  DropoutResult res;
  res.out.resize(x.size());
  res.mask.resize(x.size());
  if (!training || rate == 0.0) {
    std::copy(x.begin(), x.end(), res.out.begin());
    std::fill(res.mask.begin(), res.mask.end(), 1.0);
    return res;
  }
  const Real scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real keep = rng.uniform01() >= rate ? scale : 0.0;
    res.mask[i] = keep;
    res.out[i] = x[i] * keep;
  }
  return res;
}

std::vector<Real> dropout_backward(std::span<const Real> upstream, std::span<const Real> mask) {
  if (upstream.size() != mask.size()) {
    throw ConfigError("dropout_backward: upstream/mask size mismatch");
  }
  std::vector<Real> out(upstream.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = upstream[i] * mask[i];
  return out;
}

}  // namespace swem
