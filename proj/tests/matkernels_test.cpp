#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "rcca/error.hpp"
#include "rcca/matkernels.hpp"
#include "test_support.hpp"

using namespace rcca;
using namespace rcca::linalg;
using testing::fro;
using testing::max_diff;
using testing::naive_mul;
using testing::naive_t;
using testing::random_matrix;

namespace {

DenseMatrix random_orthonormal(std::size_t n, std::uint64_t seed) { return testing::mgs(random_matrix(n, n, seed)); }

DenseMatrix lower_factor(std::size_t n, std::uint64_t seed) {
  DenseMatrix l = random_matrix(n, n, seed);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) l(i, j) = 0.0;
    l(j, j) = 1.0 + std::abs(l(j, j));
  }
  return l;
}

}  // namespace

TEST_CASE("orthonormalize keeps an orthonormal input") {
  const DenseMatrix q = orthonormalize(DenseMatrix::identity(3));
  CHECK(max_diff(q, DenseMatrix::identity(3)) < 1e-15);
}

TEST_CASE("orthonormalize normalizes a single column") {
  const DenseMatrix q = orthonormalize(DenseMatrix::from_rows({{3}, {4}}));
  REQUIRE(q.cols() == 1);
  CHECK(std::abs(std::abs(q(0, 0)) - 0.6) < 1e-15);
  CHECK(std::abs(std::abs(q(1, 0)) - 0.8) < 1e-15);
  CHECK(q(0, 0) * q(1, 0) > 0.0);
}

TEST_CASE("orthonormalize spans the same space as Gram-Schmidt") {
  const DenseMatrix m = random_matrix(10, 4, 11);
  const DenseMatrix q = orthonormalize(m);
  REQUIRE(q.cols() == 4);
  CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(q), q)) <= 1e-12);
  CHECK(fro(m - naive_mul(q, naive_mul(naive_t(q), m))) <= 1e-10 * fro(m));
  // Positive R diagonal fixes the basis uniquely, so it must equal MGS.
  CHECK(max_diff(q, testing::mgs(m)) < 1e-12);
}

TEST_CASE("orthonormalize drops dependent columns") {
  DenseMatrix m = random_matrix(8, 3, 5);
  DenseMatrix wide(8, 4);
  for (std::size_t i = 0; i < 8; ++i) {
    wide(i, 0) = m(i, 0);
    wide(i, 1) = m(i, 1);
    wide(i, 2) = 2.0 * m(i, 0) - m(i, 1);
    wide(i, 3) = m(i, 2);
  }
  const DenseMatrix q = orthonormalize(wide);
  CHECK(q.cols() == 3);
  CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(q), q)) <= 1e-12);
  CHECK(fro(wide - naive_mul(q, naive_mul(naive_t(q), wide))) <= 1e-10 * fro(wide));
}

TEST_CASE("orthonormalize rejects a zero matrix") {
  CHECK_THROWS_WITH_AS(orthonormalize(DenseMatrix(4, 2)), "rank zero input", NumericalError);
}

TEST_CASE("orthonormalize property over random shapes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t rows = 5 + seed % 17;
    const std::size_t cols = 1 + seed % 5;
    const DenseMatrix m = random_matrix(rows, cols, 100 + seed);
    const DenseMatrix q = orthonormalize(m);
    CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(q), q)) <= 1e-12);
    CHECK(fro(m - naive_mul(q, naive_mul(naive_t(q), m))) <= 1e-10 * fro(m));
  }
}

TEST_CASE("cholesky small cases") {
  CHECK(max_diff(cholesky(DenseMatrix::identity(4)), DenseMatrix::identity(4)) == 0.0);
  const DenseMatrix l = cholesky(DenseMatrix::from_rows({{4, 2}, {2, 5}}));
  CHECK(max_diff(l, DenseMatrix::from_rows({{2, 0}, {1, 2}})) < 1e-15);
}

TEST_CASE("cholesky reconstructs random SPD matrices") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DenseMatrix r = random_matrix(6, 6, 200 + seed);
    DenseMatrix s = naive_mul(naive_t(r), r);
    for (std::size_t i = 0; i < 6; ++i) s(i, i) += 1.0;
    const DenseMatrix l = cholesky(s);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(l(j, j) > 0.0);
      for (std::size_t i = 0; i < j; ++i) CHECK(l(i, j) == 0.0);
    }
    CHECK(fro(naive_mul(l, naive_t(l)) - s) <= 1e-10 * fro(s));
  }
}

TEST_CASE("cholesky on an ill-conditioned SPD matrix") {
  const DenseMatrix q = random_orthonormal(5, 31);
  DenseMatrix d(5, 5);
  for (std::size_t i = 0; i < 5; ++i) d(i, i) = std::pow(10.0, -2.0 * static_cast<double>(i));
  DenseMatrix s = naive_mul(naive_mul(q, d), naive_t(q));
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = j + 1; i < 5; ++i) s(j, i) = s(i, j);
  const DenseMatrix l = cholesky(s);
  CHECK(fro(naive_mul(l, naive_t(l)) - s) <= 1e-10 * fro(s));
}

TEST_CASE("cholesky errors") {
  CHECK_THROWS_WITH_AS(cholesky(DenseMatrix::from_rows({{1, 2}, {2, 1}})),
                       "not positive definite; increase regularization", NumericalError);
  CHECK_THROWS_AS(cholesky(DenseMatrix::from_rows({{1, 0.5}, {0.0, 1}})), std::invalid_argument);
  CHECK_THROWS_AS(cholesky(DenseMatrix(2, 3)), std::invalid_argument);
}

TEST_CASE("whiten_cross identity and diagonal scaling") {
  const DenseMatrix f = random_matrix(3, 4, 9);
  CHECK(max_diff(whiten_cross(f, DenseMatrix::identity(3), DenseMatrix::identity(4)), f) == 0.0);
  const DenseMatrix w = whiten_cross(8.0 * DenseMatrix::identity(3), 2.0 * DenseMatrix::identity(3),
                                     4.0 * DenseMatrix::identity(3));
  CHECK(max_diff(w, DenseMatrix::identity(3)) < 1e-15);
}

TEST_CASE("whiten_cross matches explicit inverses") {
  const DenseMatrix la = lower_factor(5, 41);
  const DenseMatrix lb = lower_factor(5, 42);
  const DenseMatrix f = random_matrix(5, 5, 43);
  const DenseMatrix expected =
      naive_mul(naive_mul(naive_t(testing::gauss_jordan_inverse(la)), f), testing::gauss_jordan_inverse(lb));
  const DenseMatrix got = whiten_cross(f, la, lb);
  CHECK(max_diff(got, expected) <= 1e-12 * std::max(1.0, max_abs(expected)));
  // Undoing the whitening gives F back.
  CHECK(max_diff(naive_mul(naive_mul(naive_t(la), got), lb), f) <= 1e-12);
}

TEST_CASE("whiten_cross with upper factors") {
  const DenseMatrix ra = naive_t(lower_factor(4, 51));
  const DenseMatrix rb = naive_t(lower_factor(3, 52));
  const DenseMatrix f = random_matrix(4, 3, 53);
  const DenseMatrix got = whiten_cross(f, ra, rb, Triangle::upper);
  CHECK(max_diff(naive_mul(naive_mul(naive_t(ra), got), rb), f) <= 1e-12);
}

TEST_CASE("whiten_cross rejects a singular factor") {
  DenseMatrix la = DenseMatrix::identity(3);
  la(1, 1) = 0.0;
  CHECK_THROWS_WITH_AS(whiten_cross(DenseMatrix::identity(3), la, DenseMatrix::identity(3)),
                       "singular triangular factor", NumericalError);
}

TEST_CASE("svd_truncated on a diagonal matrix") {
  DenseMatrix f(3, 3);
  f(0, 0) = 3;
  f(1, 1) = 2;
  f(2, 2) = 1;
  const Svd s = svd_truncated(f, 2);
  REQUIRE(s.sigma.size() == 2);
  CHECK(s.sigma[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(s.sigma[1] == doctest::Approx(2.0).epsilon(1e-15));
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(std::abs(s.u(i, j)) - (i == j ? 1.0 : 0.0)) < 1e-15);
      CHECK(std::abs(std::abs(s.v(i, j)) - (i == j ? 1.0 : 0.0)) < 1e-15);
    }
}

TEST_CASE("svd_truncated of zero") {
  const Svd s = svd_truncated(DenseMatrix(3, 2), 1);
  REQUIRE(s.sigma.size() == 1);
  CHECK(s.sigma[0] == 0.0);
  CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(s.u), s.u)) < 1e-15);
  CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(s.v), s.v)) < 1e-15);
}

TEST_CASE("svd_truncated matches Jacobi eigenvalues of F^T F") {
  const DenseMatrix f = random_matrix(8, 6, 61);
  const Svd s = svd_truncated(f, 3);
  const std::vector<double> expected = testing::singular_values(f);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s.sigma[i] - expected[i]) <= 1e-8);
  CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(s.u), s.u)) <= 1e-10);
  CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(s.v), s.v)) <= 1e-10);
  DenseMatrix us = s.u;
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= s.sigma[j];
  CHECK(fro(naive_mul(f, s.v) - us) <= 1e-8 * fro(f));
  for (std::size_t i = 1; i < 3; ++i) CHECK(s.sigma[i - 1] >= s.sigma[i]);
}

TEST_CASE("svd_truncated wide and rank-deficient inputs") {
  const DenseMatrix g = random_matrix(2, 7, 71);
  const DenseMatrix f = naive_mul(random_matrix(5, 2, 72), g);  // 5x7, rank 2
  const Svd s = svd_truncated(f, 4);
  CHECK(s.sigma[2] <= 1e-12 * s.sigma[0]);
  CHECK(s.sigma[3] <= 1e-12 * s.sigma[0]);
  CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(s.u), s.u)) <= 1e-10);
  CHECK(max_abs_deviation_from_identity(naive_mul(naive_t(s.v), s.v)) <= 1e-10);
}

TEST_CASE("svd_truncated rejects k above the smaller dimension") {
  CHECK_THROWS_AS(svd_truncated(DenseMatrix(3, 2), 3), std::invalid_argument);
}

TEST_CASE("singular values are invariant under orthogonal rotations") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DenseMatrix f = random_matrix(6, 5, 300 + seed);
    const DenseMatrix rotated = naive_mul(naive_mul(random_orthonormal(6, 400 + seed), f),
                                          random_orthonormal(5, 500 + seed));
    const Svd a = svd_truncated(f, 5);
    const Svd b = svd_truncated(rotated, 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(a.sigma[i] - b.sigma[i]) <= 1e-10);
  }
}

TEST_CASE("solve_triangular in all four forms") {
  const DenseMatrix l = lower_factor(4, 81);
  const DenseMatrix u = naive_t(lower_factor(4, 82));
  const DenseMatrix b = random_matrix(4, 2, 83);
  CHECK(max_diff(naive_mul(l, solve_triangular(l, b, Triangle::lower, false)), b) < 1e-12);
  CHECK(max_diff(naive_mul(naive_t(l), solve_triangular(l, b, Triangle::lower, true)), b) < 1e-12);
  CHECK(max_diff(naive_mul(u, solve_triangular(u, b, Triangle::upper, false)), b) < 1e-12);
  CHECK(max_diff(naive_mul(naive_t(u), solve_triangular(u, b, Triangle::upper, true)), b) < 1e-12);
}

TEST_CASE("dense matrix helpers") {
  const DenseMatrix a = DenseMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  CHECK(a(1, 2) == 6.0);
  CHECK(a.transpose()(2, 1) == 6.0);
  const DenseMatrix b = random_matrix(3, 4, 91);
  CHECK(max_diff(matmul(a, b), naive_mul(a, b)) < 1e-14);
  CHECK(max_diff(matmul_tn(a.transpose(), b), naive_mul(a, b)) < 1e-14);
  CHECK(max_diff(matmul_nt(a, b.transpose()), naive_mul(a, b)) < 1e-14);
  CHECK(trace(DenseMatrix::identity(5)) == 5.0);
  CHECK(shape_string(a) == "2x3");
  CHECK(a.middle_cols(1, 2)(0, 0) == 2.0);
  CHECK_THROWS_AS(matmul(a, a), DimensionError);
}
