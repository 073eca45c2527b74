#include "rcca/horst.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "rcca/error.hpp"
#include "rcca/matkernels.hpp"
#include "rcca/random.hpp"

namespace rcca::horst {

using linalg::Triangle;
using twoview::View;

namespace {

std::size_t view_dim(const twoview::TwoViewDataset& ds, View view) { return view == View::a ? ds.d_a() : ds.d_b(); }

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

MetricBlock metric_whiten_block(const twoview::TwoViewDataset& ds, View view, const DenseMatrix& xt, double lambda,
                                bool centered) {
  if (ds.n() == 0) throw std::invalid_argument("metric_whiten: dataset has no rows");
  const DenseMatrix applied = twoview::pass_gram_apply(ds, view, xt, lambda, centered);
  DenseMatrix c = linalg::matmul_tn(xt, applied);
  for (std::size_t j = 0; j < c.cols(); ++j)
    for (std::size_t i = j + 1; i < c.rows(); ++i) c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));
  DenseMatrix l;
  try {
    l = linalg::cholesky(c);
  } catch (const NumericalError&) {
    throw NumericalError("rank-deficient block; reduce k or raise lambda");
  }
  const double root_n = std::sqrt(static_cast<double>(ds.n()));
  // X = sqrt(n) Xt L^{-T}; the same right factor maps M Xt to M X.
  auto right_solve = [&](const DenseMatrix& m) {
    return linalg::solve_triangular(l, m.transpose(), Triangle::lower, false).transpose() * root_n;
  };
  return {right_solve(xt), right_solve(applied)};
}

DenseMatrix metric_whiten(const twoview::TwoViewDataset& ds, View view, const DenseMatrix& xt, double lambda,
                          bool centered) {
  return metric_whiten_block(ds, view, xt, lambda, centered).x;
}

DenseMatrix approx_ls(const twoview::TwoViewDataset& ds, View view, const DenseMatrix& rhs, double lambda,
                      std::size_t inner_steps, bool centered, const MetricBlock* start) {
  if (rhs.rows() != view_dim(ds, view))
    throw DimensionError("approx_ls: rhs is " + linalg::shape_string(rhs) + " for view dimension " +
                         std::to_string(view_dim(ds, view)));
  const std::size_t k = rhs.cols();
  DenseMatrix x(rhs.rows(), k);
  DenseMatrix r = rhs;
  if (start != nullptr) {
    if (start->x.rows() != rhs.rows() || start->x.cols() != k || start->image.rows() != rhs.rows() ||
        start->image.cols() != k)
      throw DimensionError("approx_ls: starting block does not match rhs " + linalg::shape_string(rhs));
    x = start->x;
    r -= start->image;
  }
  DenseMatrix p = r;
  std::vector<double> rr(k);
  for (std::size_t j = 0; j < k; ++j) rr[j] = dot(r.col(j), r.col(j));

  for (std::size_t step = 0; step < inner_steps; ++step) {
    bool active = false;
    for (double v : rr) active = active || v > 0.0;
    if (!active) break;
    const DenseMatrix mp = twoview::pass_gram_apply(ds, view, p, lambda, centered);
    for (std::size_t j = 0; j < k; ++j) {
      auto pj = p.col(j);
      const double curvature = dot(pj, mp.col(j));
      if (rr[j] == 0.0 || !(curvature > 0.0)) {
        rr[j] = 0.0;
        continue;
      }
      const double alpha = rr[j] / curvature;
      auto xj = x.col(j);
      auto rj = r.col(j);
      auto mpj = mp.col(j);
      for (std::size_t i = 0; i < xj.size(); ++i) {
        xj[i] += alpha * pj[i];
        rj[i] -= alpha * mpj[i];
      }
      const double rr_next = dot(rj, rj);
      const double beta = rr_next / rr[j];
      for (std::size_t i = 0; i < pj.size(); ++i) pj[i] = rj[i] + beta * pj[i];
      rr[j] = rr_next;
    }
  }
  return x;
}

HorstResult horst_iterate(const twoview::TwoViewDataset& ds, const HorstConfig& cfg) {
  if (cfg.k == 0) throw std::invalid_argument("k must be at least 1");
  if (cfg.inner_steps == 0) throw std::invalid_argument("inner_steps must be at least 1");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (cfg.max_sweeps == 0) throw std::invalid_argument("max_sweeps must be at least 1");
  if (ds.n() == 0) throw std::invalid_argument("dataset has no rows");

  const Lambdas lambdas = resolve_lambdas(cfg.reg, ds);
  const twoview::CompactDataset cd = twoview::compact(ds);
  const twoview::TwoViewDataset& data = cd.data;
  if (cfg.k > std::min(data.d_a(), data.d_b()))
    throw std::invalid_argument("k = " + std::to_string(cfg.k) + " exceeds the number of active features");
  const double n = static_cast<double>(ds.n());
  const std::uint64_t pass_start = ds.pass_count();

  HorstResult result;
  std::optional<MetricBlock> block_a;
  std::optional<MetricBlock> block_b;
  DenseMatrix x_b;
  if (cfg.warm_start) {
    const CcaModel& warm = *cfg.warm_start;
    if (warm.x_b.rows() != ds.d_b() || warm.x_a.rows() != ds.d_a() || warm.x_a.cols() != cfg.k ||
        warm.x_b.cols() != cfg.k)
      throw DimensionError("warm start X_a " + linalg::shape_string(warm.x_a) + ", X_b " +
                           linalg::shape_string(warm.x_b) + " does not match d_a=" + std::to_string(ds.d_a()) +
                           ", d_b=" + std::to_string(ds.d_b()) + ", k=" + std::to_string(cfg.k));
    // Re-whitened under the current lambdas; the images seed the first solves.
    block_a = metric_whiten_block(data, View::a, twoview::gather_rows(warm.x_a, cd.features_a), lambdas.a,
                                  cfg.centered);
    block_b = metric_whiten_block(data, View::b, twoview::gather_rows(warm.x_b, cd.features_b), lambdas.b,
                                  cfg.centered);
    x_b = block_b->x;
    result.trace.initial_passes = warm.passes_used;
  } else {
    Rng rng(cfg.seed);
    block_b = metric_whiten_block(data, View::b, rng.gaussian_matrix(data.d_b(), cfg.k), lambdas.b, cfg.centered);
    x_b = block_b->x;
  }

  // Metric projection of M^{-1} rhs onto span(prev): prev (prev^T rhs) / n,
  // valid because prev^T M prev = n I.
  auto projected_start = [n](const MetricBlock& prev, const DenseMatrix& rhs) {
    const DenseMatrix coeff = linalg::matmul_tn(prev.x, rhs) * (1.0 / n);
    return MetricBlock{linalg::matmul(prev.x, coeff), linalg::matmul(prev.image, coeff)};
  };
  auto update = [&](View view, const DenseMatrix& rhs, double lambda, std::optional<MetricBlock>& block) {
    std::optional<MetricBlock> start;
    if (block) start = projected_start(*block, rhs);
    const DenseMatrix xt = approx_ls(data, view, rhs, lambda, cfg.inner_steps, cfg.centered, start ? &*start : nullptr);
    block = metric_whiten_block(data, view, xt, lambda, cfg.centered);
  };

  const DenseMatrix no_a(data.d_a(), 0);
  const DenseMatrix no_b(data.d_b(), 0);
  DenseMatrix cross;  // X_b^T Bbar^T Abar X_a
  double previous = 0.0;
  for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    const DenseMatrix rhs_a = twoview::pass_crossprod(data, no_a, x_b, cfg.centered).y_a;
    update(View::a, rhs_a, lambdas.a, block_a);
    const DenseMatrix rhs_b = twoview::pass_crossprod(data, block_a->x, no_b, cfg.centered).y_b;
    update(View::b, rhs_b, lambdas.b, block_b);
    x_b = block_b->x;
    cross = linalg::matmul_tn(x_b, rhs_b);
    const double obj = linalg::trace(cross) / n;
    if (!std::isfinite(obj))
      throw NumericalError("Horst objective became non-finite at sweep " + std::to_string(sweep + 1));
    result.trace.objectives.push_back(obj);
    result.trace.passes.push_back(result.trace.initial_passes + static_cast<std::size_t>(ds.pass_count() - pass_start));
    if (sweep > 0 && std::abs(obj - previous) < cfg.tol * std::abs(previous)) break;
    previous = obj;
  }
  const DenseMatrix& x_a = block_a->x;

  // cross^T = X_a^T Abar^T Bbar X_b
  const linalg::Svd svd = linalg::svd_truncated(cross.transpose() * (1.0 / n), cfg.k);
  CcaModel& model = result.model;
  model.x_a = twoview::expand_rows(linalg::matmul(x_a, svd.u), cd.features_a, ds.d_a());
  model.x_b = twoview::expand_rows(linalg::matmul(x_b, svd.v), cd.features_b, ds.d_b());
  model.correlations = svd.sigma;
  model.lambda_a = lambdas.a;
  model.lambda_b = lambdas.b;
  model.n_train = ds.n();
  model.passes_used = result.trace.passes.back();
  model.centered = cfg.centered;
  model.solver = "horst";
  return result;
}

}  // namespace rcca::horst
