#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rcca::linalg {

/// Small dense column-major matrix of doubles.
///
/// Used for every "thin" operand of the solvers: range-finder bases (d x m),
/// their images, the m x m Gram and cross matrices, triangular factors and
/// singular vectors. Value semantics throughout.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> column_major);

  static DenseMatrix identity(std::size_t n);
  /// Builds from a row-major nested list, e.g. {{4, 2}, {2, 5}}.
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix transpose() const;
  /// Columns [first, first + count).
  DenseMatrix middle_cols(std::size_t first, std::size_t count) const;
  /// Keeps the listed columns in the given order.
  DenseMatrix select_cols(std::span<const std::size_t> which) const;

  bool all_finite() const noexcept;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(DenseMatrix a, double s);
DenseMatrix operator*(double s, DenseMatrix a);

/// a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b without forming the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T without forming the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& m);
double max_abs(const DenseMatrix& m);
/// max |m - I| entrywise; m must be square.
double max_abs_deviation_from_identity(const DenseMatrix& m);
double trace(const DenseMatrix& m);

std::string shape_string(const DenseMatrix& m);

}  // namespace rcca::linalg

namespace rcca {
using linalg::DenseMatrix;
}
