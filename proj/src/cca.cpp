#include "rcca/cca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rcca/error.hpp"

namespace rcca {

double reg_from_nu(double nu, double trace, std::size_t d) {
  if (nu < 0.0) throw std::invalid_argument("nu must be non-negative");
  if (d == 0) throw std::invalid_argument("dimension must be positive");
  return nu * trace / static_cast<double>(d);
}

Lambdas resolve_lambdas(const Regularization& reg, const twoview::TwoViewDataset& ds) {
  if (reg.kind == Regularization::Kind::explicit_lambda) {
    if (reg.lambda_a < 0.0 || reg.lambda_b < 0.0) throw std::invalid_argument("lambda must be non-negative");
    return {reg.lambda_a, reg.lambda_b};
  }
  return {reg_from_nu(reg.nu, ds.stats().trace_a, ds.d_a()), reg_from_nu(reg.nu, ds.stats().trace_b, ds.d_b())};
}

double CcaModel::correlation_sum() const noexcept {
  return std::accumulate(correlations.begin(), correlations.end(), 0.0);
}

FeasibilityResiduals residuals_from_products(const twoview::ProjectedProducts& products, const DenseMatrix& x_a,
                                             const DenseMatrix& x_b, Lambdas lambdas, std::size_t n) {
  if (n == 0) throw std::invalid_argument("residuals need at least one row");
  const double inv_n = 1.0 / static_cast<double>(n);
  const DenseMatrix wa = (products.c_a + lambdas.a * linalg::matmul_tn(x_a, x_a)) * inv_n;
  const DenseMatrix wb = (products.c_b + lambdas.b * linalg::matmul_tn(x_b, x_b)) * inv_n;
  const DenseMatrix cross = products.f * inv_n;

  FeasibilityResiduals out;
  out.whitening_a = linalg::max_abs_deviation_from_identity(wa);
  out.whitening_b = linalg::max_abs_deviation_from_identity(wb);
  double diag = 0.0;
  double off = 0.0;
  for (std::size_t j = 0; j < cross.cols(); ++j)
    for (std::size_t i = 0; i < cross.rows(); ++i) {
      if (i == j) diag = std::max(diag, std::abs(cross(i, j)));
      else off = std::max(off, std::abs(cross(i, j)));
    }
  out.cross_offdiag = diag > 0.0 ? off / diag : off;
  return out;
}

FeasibilityResiduals feasibility_residuals(const twoview::TwoViewDataset& ds, const DenseMatrix& x_a,
                                           const DenseMatrix& x_b, Lambdas lambdas, bool centered) {
  if (x_a.cols() != x_b.cols())
    throw DimensionError("X_a is " + linalg::shape_string(x_a) + ", X_b is " + linalg::shape_string(x_b));
  const auto products = twoview::pass_final(ds, x_a, x_b, centered);
  return residuals_from_products(products, x_a, x_b, lambdas, ds.n());
}

}  // namespace rcca
