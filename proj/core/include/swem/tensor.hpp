#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "swem/common.hpp"

namespace swem {

using Real = double;

// Dense row-major matrix. The workhorse container for word vectors, weight
// matrices and sequence representations.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<Real> data;

  Tensor2() = default;
  Tensor2(int r, int c, Real fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  static Tensor2 from_rows(std::initializer_list<std::initializer_list<Real>> values);

  Real& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  Real operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  Real* row_ptr(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const Real* row_ptr(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor2& other) const { return rows == other.rows && cols == other.cols; }
  void fill(Real v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(0.0); }

  std::string shape_str() const;
};

// Dense [dim0 x dim1 x dim2] array; holds a batch of embedded sequences
// (batch x max-length x embedding-dim).
struct Tensor3 {
  int dim0 = 0;
  int dim1 = 0;
  int dim2 = 0;
  std::vector<Real> data;

  Tensor3() = default;
  Tensor3(int d0, int d1, int d2, Real fill = 0.0)
      : dim0(d0),
        dim1(d1),
        dim2(d2),
        data(static_cast<std::size_t>(d0) * d1 * d2, fill) {}

  Real& operator()(int i, int j, int k) {
    return data[(static_cast<std::size_t>(i) * dim1 + j) * dim2 + k];
  }
  Real operator()(int i, int j, int k) const {
    return data[(static_cast<std::size_t>(i) * dim1 + j) * dim2 + k];
  }

  Real* slice_ptr(int i, int j) { return data.data() + (static_cast<std::size_t>(i) * dim1 + j) * dim2; }
  const Real* slice_ptr(int i, int j) const {
    return data.data() + (static_cast<std::size_t>(i) * dim1 + j) * dim2;
  }

  std::size_t size() const { return data.size(); }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// c = a . b
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// c = a^T . b
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
// c = a . b^T
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
// c += a . b (and the transposed variants), used by backward passes.
void matmul_acc(const Tensor2& a, const Tensor2& b, Tensor2& c);
void matmul_tn_acc(const Tensor2& a, const Tensor2& b, Tensor2& c);
void matmul_nt_acc(const Tensor2& a, const Tensor2& b, Tensor2& c);

bool all_finite(const Tensor2& t);
bool all_finite(const Tensor3& t);

// Compensated (Neumaier) accumulator. Pooling sums run through this so that
// reordering the summands cannot flip the rounded result; that is what makes
// the permutation-invariance properties of the pooling encoders hold
// bit-for-bit in practice.
struct NeumaierAcc {
  Real sum = 0.0;
  Real comp = 0.0;

  void add(Real x) {
    const Real t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  Real result() const { return sum + comp; }
};

}  // namespace swem
