#pragma once

#include <cstddef>
#include <vector>

#include "rcca/cca.hpp"
#include "rcca/dense_matrix.hpp"
#include "rcca/twoview.hpp"

// Exact reference solutions at desk scale, computed through Eigen so they
// share no numerical code with the streaming solvers.

namespace rcca::oracle {

inline constexpr std::size_t kMaxRows = 10000;
inline constexpr std::size_t kMaxDim = 500;

/// Both views as dense n x d matrices. Enforces n <= 10000, d <= 500.
class DenseTwoView {
 public:
  DenseTwoView(DenseMatrix a, DenseMatrix b);

  const DenseMatrix& a() const noexcept { return a_; }
  const DenseMatrix& b() const noexcept { return b_; }
  std::size_t n() const noexcept { return a_.rows(); }

 private:
  DenseMatrix a_;
  DenseMatrix b_;
};

DenseTwoView to_dense(const twoview::TwoViewDataset& ds);

/// Regularized CCA by explicit whitening: M^{-1/2} from a full symmetric
/// eigendecomposition of each regularized Gram, then the top-k SVD of
/// Ma^{-1/2} Abar^T Bbar Mb^{-1/2}. Throws NumericalError on an indefinite
/// regularized Gram.
CcaModel exact_cca(const DenseTwoView& dv, double lambda_a, double lambda_b, std::size_t k, bool centered);

/// All singular values of (1/n) Abar^T Bbar, descending.
std::vector<double> exact_cross_spectrum(const DenseTwoView& dv, bool centered);

}  // namespace rcca::oracle
