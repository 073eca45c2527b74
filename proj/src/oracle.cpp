#include "rcca/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rcca/error.hpp"

namespace rcca::oracle {
namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  return Eigen::Map<const Eigen::MatrixXd>(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                           static_cast<Eigen::Index>(m.cols()));
}

DenseMatrix from_eigen(const Eigen::MatrixXd& m) {
  DenseMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  Eigen::Map<Eigen::MatrixXd>(out.data().data(), m.rows(), m.cols()) = m;
  return out;
}

Eigen::MatrixXd maybe_centered(const DenseMatrix& m, bool centered) {
  Eigen::MatrixXd x = to_eigen(m);
  if (centered && x.rows() > 0) x.rowwise() -= x.colwise().mean();
  return x;
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& gram, const char* view) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError(std::string("eigensolver failed for view ") + view);
  const Eigen::VectorXd w = eig.eigenvalues();
  if (w.size() > 0 && (w.minCoeff() <= 0.0 || w.minCoeff() < 1e-14 * w.maxCoeff()))
    throw NumericalError(std::string("indefinite regularized Gram for view ") + view);
  return eig.eigenvectors() * w.cwiseInverse().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

DenseTwoView::DenseTwoView(DenseMatrix a, DenseMatrix b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != b_.rows())
    throw DimensionError("oracle: views have " + std::to_string(a_.rows()) + " and " + std::to_string(b_.rows()) +
                         " rows");
  if (a_.rows() > kMaxRows || a_.cols() > kMaxDim || b_.cols() > kMaxDim)
    throw std::invalid_argument("oracle is limited to n <= 10000 and d <= 500; got " + linalg::shape_string(a_) +
                                " and " + linalg::shape_string(b_));
}

DenseTwoView to_dense(const twoview::TwoViewDataset& ds) {
  if (ds.n() > kMaxRows || ds.d_a() > kMaxDim || ds.d_b() > kMaxDim)
    throw std::invalid_argument("oracle is limited to n <= 10000 and d <= 500");
  auto densify = [&](const twoview::SparseRows& rows, std::size_t d) {
    DenseMatrix m(ds.n(), d);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto row = rows.row(r);
      for (std::size_t e = 0; e < row.index.size(); ++e) m(r, row.index[e]) = row.value[e];
    }
    return m;
  };
  return DenseTwoView(densify(ds.view_a(), ds.d_a()), densify(ds.view_b(), ds.d_b()));
}

CcaModel exact_cca(const DenseTwoView& dv, double lambda_a, double lambda_b, std::size_t k, bool centered) {
  const auto d_a = static_cast<Eigen::Index>(dv.a().cols());
  const auto d_b = static_cast<Eigen::Index>(dv.b().cols());
  if (k == 0 || k > static_cast<std::size_t>(std::min(d_a, d_b)))
    throw std::invalid_argument("exact_cca: k must be in [1, min(d_a, d_b)]");
  if (dv.n() == 0) throw std::invalid_argument("exact_cca: no rows");
  if (lambda_a < 0.0 || lambda_b < 0.0) throw std::invalid_argument("exact_cca: negative lambda");

  const Eigen::MatrixXd a = maybe_centered(dv.a(), centered);
  const Eigen::MatrixXd b = maybe_centered(dv.b(), centered);
  const Eigen::MatrixXd ma = a.transpose() * a + lambda_a * Eigen::MatrixXd::Identity(d_a, d_a);
  const Eigen::MatrixXd mb = b.transpose() * b + lambda_b * Eigen::MatrixXd::Identity(d_b, d_b);
  const Eigen::MatrixXd wa = inverse_sqrt(ma, "A");
  const Eigen::MatrixXd wb = inverse_sqrt(mb, "B");
  const Eigen::MatrixXd whitened = wa * (a.transpose() * b) * wb;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(whitened, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const auto kk = static_cast<Eigen::Index>(k);
  const double root_n = std::sqrt(static_cast<double>(dv.n()));
  CcaModel model;
  model.x_a = from_eigen(root_n * wa * svd.matrixU().leftCols(kk));
  model.x_b = from_eigen(root_n * wb * svd.matrixV().leftCols(kk));
  model.correlations.assign(svd.singularValues().data(), svd.singularValues().data() + kk);
  model.lambda_a = lambda_a;
  model.lambda_b = lambda_b;
  model.n_train = dv.n();
  model.passes_used = 0;
  model.centered = centered;
  model.solver = "oracle";
  return model;
}

std::vector<double> exact_cross_spectrum(const DenseTwoView& dv, bool centered) {
  if (dv.n() == 0) return {};
  const Eigen::MatrixXd a = maybe_centered(dv.a(), centered);
  const Eigen::MatrixXd b = maybe_centered(dv.b(), centered);
  const Eigen::MatrixXd cross = (a.transpose() * b) / static_cast<double>(dv.n());
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
  const Eigen::VectorXd s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

}  // namespace rcca::oracle
