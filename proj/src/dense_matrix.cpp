#include "rcca/dense_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "rcca/error.hpp"

namespace rcca::linalg {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major)
    : rows_(rows), cols_(cols), data_(std::move(column_major)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("DenseMatrix: data length " + std::to_string(data_.size()) + " != " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  DenseMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("DenseMatrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::middle_cols(std::size_t first, std::size_t count) const {
  if (first + count > cols_) throw DimensionError("middle_cols: range exceeds " + shape_string(*this));
  DenseMatrix out(rows_, count);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * rows_), count * rows_, out.data_.begin());
  return out;
}

DenseMatrix DenseMatrix::select_cols(std::span<const std::size_t> which) const {
  DenseMatrix out(rows_, which.size());
  for (std::size_t j = 0; j < which.size(); ++j) {
    if (which[j] >= cols_) throw DimensionError("select_cols: column out of range");
    std::ranges::copy(col(which[j]), out.col(j).begin());
  }
  return out;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::ranges::all_of(data_, [](double v) { return std::isfinite(v); });
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw DimensionError("matrix add: " + shape_string(*this) + " vs " + shape_string(other));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw DimensionError("matrix subtract: " + shape_string(*this) + " vs " + shape_string(other));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: " + shape_string(a) + " * " + shape_string(b));
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto cj = c.col(j);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double blj = b(l, j);
      if (blj == 0.0) continue;
      auto al = a.col(l);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += al[i] * blj;
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: " + shape_string(a) + "^T * " + shape_string(b));
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto bj = b.col(j);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      auto ai = a.col(i);
      double s = 0.0;
      for (std::size_t l = 0; l < a.rows(); ++l) s += ai[l] * bj[l];
      c(i, j) = s;
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: " + shape_string(a) + " * " + shape_string(b) + "^T");
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t l = 0; l < a.cols(); ++l) {
    auto al = a.col(l);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double bjl = b(j, l);
      if (bjl == 0.0) continue;
      auto cj = c.col(j);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += al[i] * bjl;
    }
  }
  return c;
}

double frobenius_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.data()) s = std::max(s, std::abs(v));
  return s;
}

double max_abs_deviation_from_identity(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("identity deviation needs a square matrix, got " + shape_string(m));
  double s = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) s = std::max(s, std::abs(m(i, j) - (i == j ? 1.0 : 0.0)));
  return s;
}

double trace(const DenseMatrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) s += m(i, i);
  return s;
}

std::string shape_string(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace rcca::linalg
