#pragma once

#include <cstddef>
#include <vector>

#include "rcca/dense_matrix.hpp"

// Dense kernels for the small matrices of the randomized solver. Everything
// here is a pure function of its arguments and works in double precision.

namespace rcca::linalg {

/// Relative threshold on |R_jj| below which orthonormalize drops a column.
inline constexpr double kRankTolerance = 1e-10;

/// Orthonormal basis for the numerical column space of m (Householder QR).
///
/// Columns whose R diagonal is below kRankTolerance times the largest one are
/// dropped (with a warning on stderr), so the result may have fewer columns
/// than m. Signs are fixed so that the retained R diagonal is positive.
/// Throws NumericalError("rank zero input") when m is identically zero.
DenseMatrix orthonormalize(const DenseMatrix& m);

/// Lower-triangular L with L L^T = s. Throws NumericalError on a non-positive
/// pivot and std::invalid_argument if s is not symmetric to 1e-10 relative.
DenseMatrix cholesky(const DenseMatrix& s);

enum class Triangle { lower, upper };

/// Solves op(t) X = b where t is triangular (only the indicated triangle is
/// read) and op is identity or transpose. Throws NumericalError on a zero
/// diagonal entry.
DenseMatrix solve_triangular(const DenseMatrix& t, const DenseMatrix& b, Triangle uplo, bool transpose);

/// la^{-T} f lb^{-1}, via two triangular solves.
///
/// With lower Cholesky factors (C = L L^T) this is the literal product. The
/// solver passes upper factors R = L^T instead, giving L_a^{-1} F L_b^{-T},
/// which is the whitened cross matrix.
DenseMatrix whiten_cross(const DenseMatrix& f, const DenseMatrix& la, const DenseMatrix& lb,
                         Triangle uplo = Triangle::lower);

struct Svd {
  DenseMatrix u;              // m x k
  std::vector<double> sigma;  // k values, descending
  DenseMatrix v;              // n x k
};

/// Top-k singular triplets of f by one-sided Jacobi.
/// Singular vectors for exactly-zero singular values are completed to an
/// orthonormal set. Throws std::invalid_argument if k > min(rows, cols).
Svd svd_truncated(const DenseMatrix& f, std::size_t k);

}  // namespace rcca::linalg
