#include "rcca/matkernels.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rcca/error.hpp"

namespace rcca::linalg {
namespace {

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// Householder QR in LAPACK-style packed form: reflector j has an implicit
// unit leading entry at row j and its tail stored below the diagonal.
struct HouseholderQr {
  DenseMatrix packed;
  std::vector<double> tau;
  std::vector<double> r_diag;
};

HouseholderQr householder_factor(DenseMatrix a) {
  const std::size_t n = a.rows();
  const std::size_t t = std::min(n, a.cols());
  std::vector<double> tau(t, 0.0);
  std::vector<double> r_diag(t, 0.0);
  for (std::size_t j = 0; j < t; ++j) {
    auto x = a.col(j).subspan(j);
    const double norm = std::sqrt(dot(x, x));
    if (norm == 0.0) continue;  // H_j = I, R_jj = 0
    const double x0 = x[0];
    const double beta = -std::copysign(norm, x0);
    tau[j] = (beta - x0) / beta;
    const double scale = 1.0 / (x0 - beta);
    for (std::size_t i = 1; i < x.size(); ++i) x[i] *= scale;
    x[0] = beta;
    r_diag[j] = beta;
    // apply H_j = I - tau v v^T to the trailing columns
    for (std::size_t c = j + 1; c < a.cols(); ++c) {
      auto y = a.col(c).subspan(j);
      double w = y[0];
      for (std::size_t i = 1; i < y.size(); ++i) w += x[i] * y[i];
      w *= tau[j];
      y[0] -= w;
      for (std::size_t i = 1; i < y.size(); ++i) y[i] -= w * x[i];
    }
  }
  return {std::move(a), std::move(tau), std::move(r_diag)};
}

// Thin Q (n x t) = H_0 ... H_{t-1} [I_t; 0], columns flipped so diag(R) > 0.
DenseMatrix householder_thin_q(const HouseholderQr& qr, std::size_t t) {
  const std::size_t n = qr.packed.rows();
  DenseMatrix q(n, t);
  for (std::size_t j = 0; j < t; ++j) q(j, j) = 1.0;
  for (std::size_t jj = t; jj-- > 0;) {
    if (qr.tau[jj] == 0.0) continue;
    auto v = qr.packed.col(jj).subspan(jj);
    for (std::size_t c = jj; c < t; ++c) {
      auto y = q.col(c).subspan(jj);
      double w = y[0];
      for (std::size_t i = 1; i < y.size(); ++i) w += v[i] * y[i];
      w *= qr.tau[jj];
      y[0] -= w;
      for (std::size_t i = 1; i < y.size(); ++i) y[i] -= w * v[i];
    }
  }
  for (std::size_t j = 0; j < t; ++j)
    if (qr.r_diag[j] < 0.0)
      for (double& e : q.col(j)) e = -e;
  return q;
}

}  // namespace

DenseMatrix orthonormalize(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("orthonormalize: empty input " + shape_string(m));
  if (max_abs(m) == 0.0) throw NumericalError("rank zero input");

  std::vector<std::size_t> keep(m.cols());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  for (;;) {
    HouseholderQr qr = householder_factor(m.select_cols(keep));
    const std::size_t t = qr.r_diag.size();
    double largest = 0.0;
    for (double d : qr.r_diag) largest = std::max(largest, std::abs(d));
    const double threshold = kRankTolerance * largest;

    std::vector<std::size_t> retained;
    retained.reserve(keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j)
      if (j >= t || std::abs(qr.r_diag[j]) >= threshold) retained.push_back(keep[j]);

    if (retained.size() == keep.size() && keep.size() <= m.rows()) return householder_thin_q(qr, t);

    if (retained.size() == keep.size()) {
      // Full rank in the first n columns; the remainder cannot add anything.
      std::cerr << "warning: orthonormalize: dropped " << keep.size() - t << " of " << m.cols()
                << " columns (more columns than rows)\n";
      return householder_thin_q(qr, t);
    }
    std::cerr << "warning: orthonormalize: dropped " << keep.size() - retained.size() << " of " << m.cols()
              << " columns below relative rank tolerance\n";
    keep = std::move(retained);
  }
}

DenseMatrix cholesky(const DenseMatrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw DimensionError("cholesky: matrix is " + shape_string(s));
  const double scale = max_abs(s);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = j + 1; i < n; ++i)
      if (std::abs(s(i, j) - s(j, i)) > 1e-10 * scale) throw std::invalid_argument("cholesky: matrix is not symmetric");

  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = s(j, j);
    for (std::size_t p = 0; p < j; ++p) pivot -= l(j, p) * l(j, p);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) throw NumericalError("not positive definite; increase regularization");
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (std::size_t p = 0; p < j; ++p) v -= l(i, p) * l(j, p);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

DenseMatrix solve_triangular(const DenseMatrix& t, const DenseMatrix& b, Triangle uplo, bool transpose) {
  const std::size_t n = t.rows();
  if (t.cols() != n || b.rows() != n)
    throw DimensionError("solve_triangular: factor " + shape_string(t) + ", rhs " + shape_string(b));
  for (std::size_t i = 0; i < n; ++i)
    if (t(i, i) == 0.0) throw NumericalError("singular triangular factor");

  auto op = [&](std::size_t i, std::size_t j) { return transpose ? t(j, i) : t(i, j); };
  const bool forward = (uplo == Triangle::lower) != transpose;

  DenseMatrix x = b;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    auto xc = x.col(c);
    if (forward) {
      for (std::size_t i = 0; i < n; ++i) {
        double v = xc[i];
        for (std::size_t j = 0; j < i; ++j) v -= op(i, j) * xc[j];
        xc[i] = v / op(i, i);
      }
    } else {
      for (std::size_t i = n; i-- > 0;) {
        double v = xc[i];
        for (std::size_t j = i + 1; j < n; ++j) v -= op(i, j) * xc[j];
        xc[i] = v / op(i, i);
      }
    }
  }
  return x;
}

DenseMatrix whiten_cross(const DenseMatrix& f, const DenseMatrix& la, const DenseMatrix& lb, Triangle uplo) {
  if (la.rows() != f.rows() || lb.rows() != f.cols())
    throw DimensionError("whiten_cross: F " + shape_string(f) + ", La " + shape_string(la) + ", Lb " +
                         shape_string(lb));
  const DenseMatrix left = solve_triangular(la, f, uplo, /*transpose=*/true);
  return solve_triangular(lb, left.transpose(), uplo, /*transpose=*/true).transpose();
}

Svd svd_truncated(const DenseMatrix& f, std::size_t k) {
  if (k > std::min(f.rows(), f.cols()))
    throw std::invalid_argument("svd_truncated: k=" + std::to_string(k) + " exceeds min dimension of " +
                                shape_string(f));
  const bool flip = f.rows() < f.cols();
  DenseMatrix a = flip ? f.transpose() : f;
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  DenseMatrix v = DenseMatrix::identity(c);

  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double tol = std::clamp(static_cast<double>(r) * eps, eps, 1e-12);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < c; ++p) {
      for (std::size_t q = p + 1; q < c; ++q) {
        auto ap = a.col(p);
        auto aq = a.col(q);
        const double alpha = dot(ap, ap);
        const double beta = dot(aq, aq);
        const double gamma = dot(ap, aq);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double tn = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + tn * tn);
        const double sn = cs * tn;
        for (std::size_t i = 0; i < r; ++i) {
          const double x = ap[i];
          const double y = aq[i];
          ap[i] = cs * x - sn * y;
          aq[i] = sn * x + cs * y;
        }
        auto vp = v.col(p);
        auto vq = v.col(q);
        for (std::size_t i = 0; i < c; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = cs * x - sn * y;
          vq[i] = sn * x + cs * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(c);
  for (std::size_t j = 0; j < c; ++j) norms[j] = std::sqrt(dot(a.col(j), a.col(j)));
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });
  order.resize(k);

  Svd out{DenseMatrix(r, k), std::vector<double>(k), v.select_cols(order)};
  std::vector<std::size_t> missing;
  for (std::size_t j = 0; j < k; ++j) {
    const double s = norms[order[j]];
    out.sigma[j] = s;
    if (!(s > 0.0) || !std::isnormal(s)) {
      out.sigma[j] = 0.0;
      missing.push_back(j);
      continue;
    }
    auto src = a.col(order[j]);
    auto dst = out.u.col(j);
    for (std::size_t i = 0; i < r; ++i) dst[i] = src[i] / s;
  }

  // Complete left vectors of zero singular values with unit vectors projected
  // off everything already placed.
  std::vector<std::size_t> placed;
  for (std::size_t j = 0; j < k; ++j)
    if (std::ranges::find(missing, j) == missing.end()) placed.push_back(j);
  for (std::size_t j : missing) {
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < r && best_norm < 0.5; ++e) {
      std::vector<double> cand(r, 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t pj : placed) {
          auto u = out.u.col(pj);
          const double w = dot(u, cand);
          for (std::size_t i = 0; i < r; ++i) cand[i] -= w * u[i];
        }
      }
      const double nrm = std::sqrt(dot(cand, cand));
      if (nrm > best_norm) {
        best_norm = nrm;
        best = std::move(cand);
      }
    }
    auto dst = out.u.col(j);
    for (std::size_t i = 0; i < r; ++i) dst[i] = best[i] / best_norm;
    placed.push_back(j);
  }

  if (flip) std::swap(out.u, out.v);
  return out;
}

}  // namespace rcca::linalg
