#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rcca/cca.hpp"
#include "rcca/twoview.hpp"

namespace rcca {

struct CcaConfig {
  std::size_t k = 10;
  /// Oversampling; unset means max(10 k, 100).
  std::optional<std::size_t> p;
  /// Power iterations (range-finder passes).
  std::size_t q = 1;
  Regularization reg = Regularization::scale_free(0.01);
  std::uint64_t seed = 0;
  bool centered = false;

  std::size_t oversampling() const noexcept { return p.value_or(k * 10 > 100 ? k * 10 : 100); }
};

/// Randomized CCA over the top range of Abar^T Bbar.
///
/// Gaussian bases are drawn on the active features of each view, refined by
/// q alternating multiplications with Abar^T Bbar and Bbar^T Abar (each
/// followed by orthonormalization), then one final pass forms the projected
/// Gram and cross matrices. The exact regularized problem restricted to
/// span(Q_a) x span(Q_b) is solved with two Cholesky factorizations and an
/// SVD of the whitened cross matrix. Uses exactly q + 1 passes.
///
/// The basis sizes are capped at the number of active features per view.
/// Throws NumericalError if a Cholesky factorization fails or the basis rank
/// drops below k.
CcaModel randomized_cca(const twoview::TwoViewDataset& ds, const CcaConfig& cfg);

/// Expected range-finder error bound
///   [1 + 4 sqrt(k + p) / (p - ktilde - 1) * sqrt(n)]^(1/q) * sigma_ktilde.
/// Diagnostic only. Throws std::invalid_argument if p - ktilde - 1 <= 0 or q == 0.
double rangefinder_bound(std::size_t k, std::size_t p, std::size_t q, std::size_t n, double sigma_ktilde,
                         std::size_t ktilde);

/// Largest canonical correlation attainable outside the top-ktilde cross
/// range: sigma_ktilde / sqrt(lambda_a lambda_b).
double residual_correlation_cap(double sigma_ktilde, double lambda_a, double lambda_b);

struct SpectrumEstimate {
  std::vector<double> values;  // ell entries, descending; zero-padded past `rank`
  std::size_t rank = 0;        // numerical rank of the sketch
  bool rank_deficient = false;
  std::size_t passes = 0;
};

/// Two-pass randomized estimate of the top-ell singular values of (1/n) Abar^T Bbar.
SpectrumEstimate estimate_spectrum(const twoview::TwoViewDataset& ds, std::size_t ell, std::uint64_t seed,
                                   bool centered);

}  // namespace rcca
