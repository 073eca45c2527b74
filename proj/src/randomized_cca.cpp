#include "rcca/randomized_cca.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include "rcca/error.hpp"
#include "rcca/matkernels.hpp"
#include "rcca/random.hpp"

namespace rcca {

using linalg::Triangle;

namespace {

DenseMatrix regularized_factor(const DenseMatrix& gram, const DenseMatrix& basis, double lambda, const char* view) {
  try {
    return linalg::cholesky(gram + lambda * linalg::matmul_tn(basis, basis));
  } catch (const NumericalError&) {
    throw NumericalError(std::string("Cholesky of the projected Gram of view ") + view +
                         " failed: not positive definite; increase regularization nu");
  }
}

void require_rank(const DenseMatrix& q, std::size_t k, const char* view) {
  if (q.cols() < k)
    throw NumericalError(std::string("range finder basis for view ") + view + " collapsed to rank " +
                         std::to_string(q.cols()) + " < k = " + std::to_string(k));
}

}  // namespace

CcaModel randomized_cca(const twoview::TwoViewDataset& ds, const CcaConfig& cfg) {
  if (cfg.k == 0) throw std::invalid_argument("k must be at least 1");
  if (ds.n() == 0) throw std::invalid_argument("dataset has no rows");

  const Lambdas lambdas = resolve_lambdas(cfg.reg, ds);
  const std::size_t m = cfg.k + cfg.oversampling();
  if (m > std::min({ds.d_a(), ds.d_b(), ds.n()}))
    std::cerr << "warning: k + p = " << m << " exceeds min(d_a, d_b, n) = " << std::min({ds.d_a(), ds.d_b(), ds.n()})
              << "\n";

  const twoview::CompactDataset cd = twoview::compact(ds);
  const twoview::TwoViewDataset& data = cd.data;
  const std::size_t m_a = std::min(m, data.d_a());
  const std::size_t m_b = std::min(m, data.d_b());
  if (std::min(m_a, m_b) < cfg.k)
    throw std::invalid_argument("only " + std::to_string(std::min(data.d_a(), data.d_b())) +
                                " active features available for k = " + std::to_string(cfg.k));

  const std::uint64_t start = ds.pass_count();
  Rng rng(cfg.seed);
  DenseMatrix q_a = rng.gaussian_matrix(data.d_a(), m_a);
  DenseMatrix q_b = rng.gaussian_matrix(data.d_b(), m_b);

  for (std::size_t it = 0; it < cfg.q; ++it) {
    twoview::CrossImages y = twoview::pass_crossprod(data, q_a, q_b, cfg.centered);
    q_a = linalg::orthonormalize(y.y_a);
    q_b = linalg::orthonormalize(y.y_b);
    require_rank(q_a, cfg.k, "A");
    require_rank(q_b, cfg.k, "B");
  }

  const twoview::ProjectedProducts prod = twoview::pass_final(data, q_a, q_b, cfg.centered);
  // Upper factors R = L^T, so C = R^T R and Q R^{-1} whitens.
  const DenseMatrix r_a = regularized_factor(prod.c_a, q_a, lambdas.a, "A").transpose();
  const DenseMatrix r_b = regularized_factor(prod.c_b, q_b, lambdas.b, "B").transpose();
  const DenseMatrix whitened = linalg::whiten_cross(prod.f, r_a, r_b, Triangle::upper);
  const linalg::Svd svd = linalg::svd_truncated(whitened, cfg.k);

  const double root_n = std::sqrt(static_cast<double>(ds.n()));
  DenseMatrix x_a = linalg::matmul(q_a, linalg::solve_triangular(r_a, svd.u, Triangle::upper, false)) * root_n;
  DenseMatrix x_b = linalg::matmul(q_b, linalg::solve_triangular(r_b, svd.v, Triangle::upper, false)) * root_n;

  CcaModel model;
  model.x_a = twoview::expand_rows(x_a, cd.features_a, ds.d_a());
  model.x_b = twoview::expand_rows(x_b, cd.features_b, ds.d_b());
  model.correlations = svd.sigma;
  constexpr double kCeiling = 1.0 + 1e-8;
  for (double& c : model.correlations) {
    if (c > kCeiling) {
      if (lambdas.a > 0.0 && lambdas.b > 0.0)
        throw std::logic_error("regularized canonical correlation " + std::to_string(c) + " exceeds 1");
      c = kCeiling;
    }
  }
  model.lambda_a = lambdas.a;
  model.lambda_b = lambdas.b;
  model.n_train = ds.n();
  model.passes_used = static_cast<std::size_t>(ds.pass_count() - start);
  model.centered = cfg.centered;
  model.solver = "rcca";
  return model;
}

double rangefinder_bound(std::size_t k, std::size_t p, std::size_t q, std::size_t n, double sigma_ktilde,
                         std::size_t ktilde) {
  if (q == 0) throw std::invalid_argument("rangefinder_bound needs q >= 1");
  if (p <= ktilde + 1) throw std::invalid_argument("oversampling too small for target rank");
  const double gap = static_cast<double>(p - ktilde - 1);
  const double base = 1.0 + 4.0 * std::sqrt(static_cast<double>(k + p)) / gap * std::sqrt(static_cast<double>(n));
  return std::pow(base, 1.0 / static_cast<double>(q)) * sigma_ktilde;
}

double residual_correlation_cap(double sigma_ktilde, double lambda_a, double lambda_b) {
  if (!(lambda_a > 0.0) || !(lambda_b > 0.0)) throw std::invalid_argument("regularizers must be positive");
  return sigma_ktilde / std::sqrt(lambda_a * lambda_b);
}

SpectrumEstimate estimate_spectrum(const twoview::TwoViewDataset& ds, std::size_t ell, std::uint64_t seed,
                                   bool centered) {
  if (ell == 0 || ell > std::min(ds.d_a(), ds.d_b()))
    throw std::invalid_argument("ell must be in [1, min(d_a, d_b)]");
  if (ds.n() == 0) throw std::invalid_argument("dataset has no rows");

  const twoview::CompactDataset cd = twoview::compact(ds);
  const twoview::TwoViewDataset& data = cd.data;
  const std::uint64_t start = ds.pass_count();

  Rng rng(seed);
  const DenseMatrix omega = rng.gaussian_matrix(data.d_b(), std::min(ell, data.d_b()));
  const DenseMatrix sketch = twoview::pass_crossprod(data, DenseMatrix(data.d_a(), 0), omega, centered).y_a;
  DenseMatrix basis(data.d_a(), 0);
  if (sketch.size() > 0 && linalg::max_abs(sketch) > 0.0) basis = linalg::orthonormalize(sketch);
  // T = Bbar^T Abar Q, so T^T = Q^T Abar^T Bbar.
  const DenseMatrix t = twoview::pass_crossprod(data, basis, DenseMatrix(data.d_b(), 0), centered).y_b;

  SpectrumEstimate out;
  out.rank = basis.cols();
  out.values.assign(ell, 0.0);
  const linalg::Svd svd = linalg::svd_truncated(t, std::min(t.rows(), t.cols()));
  const double n = static_cast<double>(ds.n());
  for (std::size_t i = 0; i < svd.sigma.size() && i < ell; ++i) out.values[i] = svd.sigma[i] / n;
  out.rank_deficient = out.rank < ell;
  out.passes = static_cast<std::size_t>(ds.pass_count() - start);
  return out;
}

}  // namespace rcca
