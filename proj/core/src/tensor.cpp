#include "swem/tensor.hpp"

#include <Eigen/Core>

#include <cmath>

namespace swem {

namespace {

using EigenMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenMat>;
using Map = Eigen::Map<EigenMat>;

void require_shape(bool ok, const Tensor2& a, const Tensor2& b, const char* op) {
  if (!ok) {
    throw ConfigError(std::string(op) + ": shapes do not conform: " + a.shape_str() + " vs " +
                      b.shape_str());
  }
}

}  // namespace

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<Real>> values) {
  Tensor2 t(static_cast<int>(values.size()),
            values.size() ? static_cast<int>(values.begin()->size()) : 0);
  int i = 0;
  for (const auto& row : values) {
    if (static_cast<int>(row.size()) != t.cols) {
      throw ConfigError("from_rows: ragged initializer");
    }
    int j = 0;
    for (Real v : row) t(i, j++) = v;
    ++i;
  }
  return t;
}

std::string Tensor2::shape_str() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  require_shape(a.cols == b.rows, a, b, "matmul");
  Tensor2 c(a.rows, b.cols);
  Map(c.data.data(), c.rows, c.cols).noalias() =
      ConstMap(a.data.data(), a.rows, a.cols) * ConstMap(b.data.data(), b.rows, b.cols);
  return c;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  require_shape(a.rows == b.rows, a, b, "matmul_tn");
  Tensor2 c(a.cols, b.cols);
  Map(c.data.data(), c.rows, c.cols).noalias() =
      ConstMap(a.data.data(), a.rows, a.cols).transpose() * ConstMap(b.data.data(), b.rows, b.cols);
  return c;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  require_shape(a.cols == b.cols, a, b, "matmul_nt");
  Tensor2 c(a.rows, b.rows);
  Map(c.data.data(), c.rows, c.cols).noalias() =
      ConstMap(a.data.data(), a.rows, a.cols) * ConstMap(b.data.data(), b.rows, b.cols).transpose();
  return c;
}

void matmul_acc(const Tensor2& a, const Tensor2& b, Tensor2& c) {
  require_shape(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, a, b, "matmul_acc");
  Map(c.data.data(), c.rows, c.cols).noalias() +=
      ConstMap(a.data.data(), a.rows, a.cols) * ConstMap(b.data.data(), b.rows, b.cols);
}

void matmul_tn_acc(const Tensor2& a, const Tensor2& b, Tensor2& c) {
  require_shape(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, a, b, "matmul_tn_acc");
  Map(c.data.data(), c.rows, c.cols).noalias() +=
      ConstMap(a.data.data(), a.rows, a.cols).transpose() * ConstMap(b.data.data(), b.rows, b.cols);
}

void matmul_nt_acc(const Tensor2& a, const Tensor2& b, Tensor2& c) {
  require_shape(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, a, b, "matmul_nt_acc");
  Map(c.data.data(), c.rows, c.cols).noalias() +=
      ConstMap(a.data.data(), a.rows, a.cols) * ConstMap(b.data.data(), b.rows, b.cols).transpose();
}

bool all_finite(const Tensor2& t) {
  for (Real v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool all_finite(const Tensor3& t) {
  for (Real v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace swem
