#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rcca/cca.hpp"
#include "rcca/twoview.hpp"

namespace rcca::horst {

struct HorstConfig {
  std::size_t k = 10;
  Regularization reg = Regularization::scale_free(0.01);
  std::size_t max_sweeps = 300;
  /// CG iterations per least-squares solve; each costs one pass.
  std::size_t inner_steps = 3;
  /// Stop when |f_t - f_{t-1}| < tol |f_{t-1}|.
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// Initial X_b (and pass offset) when set; Gaussian random init otherwise.
  std::optional<CcaModel> warm_start;
  bool centered = false;
};

/// Objective after each sweep and the cumulative number of passes at that
/// point, counting the passes spent producing the warm start if any.
struct HorstTrace {
  std::size_t initial_passes = 0;
  std::vector<double> objectives;
  std::vector<std::size_t> passes;
};

struct HorstResult {
  CcaModel model;
  HorstTrace trace;
};

/// A block X together with its image M X under M = Vbar^T Vbar + lambda I.
struct MetricBlock {
  DenseMatrix x;
  DenseMatrix image;
};

/// sqrt(n) Xt L^{-T} with L L^T = Xt^T (Vbar^T Vbar + lambda I) Xt. One pass.
/// Throws NumericalError when the block is rank deficient in that metric.
DenseMatrix metric_whiten(const twoview::TwoViewDataset& ds, twoview::View view, const DenseMatrix& xt, double lambda,
                          bool centered);

/// metric_whiten that also returns M X, which falls out of the same pass.
MetricBlock metric_whiten_block(const twoview::TwoViewDataset& ds, twoview::View view, const DenseMatrix& xt,
                                double lambda, bool centered);

/// `inner_steps` conjugate-gradient iterations on (Vbar^T Vbar + lambda I) X = rhs,
/// one pass per iteration, all columns advanced together. Starts from zero,
/// or from `start` (whose image must be supplied) at no extra pass.
/// Stops early (without a pass) only when every residual is exactly zero.
DenseMatrix approx_ls(const twoview::TwoViewDataset& ds, twoview::View view, const DenseMatrix& rhs, double lambda,
                      std::size_t inner_steps, bool centered, const MetricBlock* start = nullptr);

/// Gauss-Seidel Horst iteration: each sweep updates X_a from X_b, then X_b
/// from the new X_a, each by an approximate ridge solve followed by metric
/// whitening. Each inner solve starts from the metric projection of the
/// solution onto the previous block of that view, X_prev (X_prev^T rhs) / n
/// (from zero for the very first A solve of a random start), so the inexact
/// solves lose nothing at the fixed point. Initialization costs one pass
/// (random: whiten a Gaussian X_b) or two (warm: re-whiten both blocks of the
/// model). A sweep costs 2 (inner_steps + 2) passes; the objective is read
/// off the B-side right-hand side at no extra cost. The final model is
/// rotated by the SVD of the k x k cross matrix so its cross-covariance is
/// diagonal with correlations descending.
HorstResult horst_iterate(const twoview::TwoViewDataset& ds, const HorstConfig& cfg);

}  // namespace rcca::horst
