#pragma once

#include <span>
#include <utility>
#include <vector>

#include "swem/rng.hpp"
#include "swem/tensor.hpp"

namespace swem {

// out[i,j] = sum_k x[i,k] W[k,j] + b[0,j]
Tensor2 affine_forward(const Tensor2& x, const Tensor2& w, const Tensor2& b);

struct AffineGrads {
  Tensor2 grad_x;
  Tensor2 grad_w;
  Tensor2 grad_b;
};
AffineGrads affine_backward(const Tensor2& upstream, const Tensor2& x, const Tensor2& w);

// Elementwise max(0, x). The subgradient at exactly 0 is 0, so the backward
// pass stays deterministic.
Tensor2 relu_forward(const Tensor2& x);
Tensor2 relu_backward(const Tensor2& upstream, const Tensor2& x);
void relu_forward_inplace(std::span<Real> x);

// Row-wise softmax with max-subtraction.
Tensor2 softmax(const Tensor2& logits);

struct SoftmaxXentResult {
  double loss = 0.0;
  Tensor2 grad_logits;            // (softmax - onehot) / batch
  std::vector<double> row_loss;   // per-example negative log-likelihood
};
SoftmaxXentResult softmax_cross_entropy(const Tensor2& logits, std::span<const int> labels);

struct SigmoidBceResult {
  double loss = 0.0;
  Tensor2 grad_logits;            // (sigmoid - label) / batch
  std::vector<double> row_loss;
};
// logits is [B x 1]; labels must be 0 or 1.
SigmoidBceResult sigmoid_binary_cross_entropy(const Tensor2& logits, std::span<const int> labels);

struct DropoutResult {
  std::vector<Real> out;
  // Multiplier applied per element: 0 for dropped, 1/(1-rate) for kept.
  // Identity (all ones) in inference mode or at rate 0.
  std::vector<Real> mask;
};
// Inverted dropout. rate must lie in [0, 1).
DropoutResult dropout_forward(std::span<const Real> x, double rate, Rng& rng, bool training);
std::vector<Real> dropout_backward(std::span<const Real> upstream, std::span<const Real> mask);

}  // namespace swem
