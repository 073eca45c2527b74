#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcca/dense_matrix.hpp"
#include "rcca/twoview.hpp"

namespace rcca {

/// Ridge strength for the whitening constraints, either given directly or
/// through the scale-free form lambda = nu * Tr(Gram) / d.
struct Regularization {
  enum class Kind { scale_free, explicit_lambda };
  Kind kind = Kind::scale_free;
  double nu = 0.01;
  double lambda_a = 0.0;
  double lambda_b = 0.0;

  static Regularization scale_free(double nu) { return {Kind::scale_free, nu, 0.0, 0.0}; }
  static Regularization explicit_values(double lambda_a, double lambda_b) {
    return {Kind::explicit_lambda, 0.0, lambda_a, lambda_b};
  }
};

struct Lambdas {
  double a = 0.0;
  double b = 0.0;
};

/// nu * trace / d.
double reg_from_nu(double nu, double trace, std::size_t d);

/// Resolves a Regularization against the dataset's Gram traces and dimensions.
Lambdas resolve_lambdas(const Regularization& reg, const twoview::TwoViewDataset& ds);

/// Projections and canonical correlations produced by any of the solvers.
///
/// Invariants (checked by feasibility_residuals):
///   X_a^T (Abar^T Abar + lambda_a I) X_a = n I, same for view B;
///   X_a^T Abar^T Bbar X_b = n diag(correlations).
struct CcaModel {
  DenseMatrix x_a;  // d_a x k
  DenseMatrix x_b;  // d_b x k
  std::vector<double> correlations;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  std::size_t n_train = 0;
  std::size_t passes_used = 0;
  bool centered = false;
  std::string solver;

  std::size_t k() const noexcept { return correlations.size(); }
  double correlation_sum() const noexcept;
};

struct FeasibilityResiduals {
  double whitening_a = 0.0;    // max |(X_a^T Abar^T Abar X_a + lambda_a X_a^T X_a)/n - I|
  double whitening_b = 0.0;
  double cross_offdiag = 0.0;  // max off-diagonal of X_a^T Abar^T Bbar X_b / n over its largest |diagonal|
};

/// One counted pass over ds.
FeasibilityResiduals feasibility_residuals(const twoview::TwoViewDataset& ds, const DenseMatrix& x_a,
                                           const DenseMatrix& x_b, Lambdas lambdas, bool centered);

/// Same quantities from already-accumulated products (no pass).
FeasibilityResiduals residuals_from_products(const twoview::ProjectedProducts& products, const DenseMatrix& x_a,
                                             const DenseMatrix& x_b, Lambdas lambdas, std::size_t n);

}  // namespace rcca
