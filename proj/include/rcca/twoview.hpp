#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rcca/dense_matrix.hpp"

namespace rcca::twoview {

/// One sparse row: strictly increasing indices with matching values.
struct SparseRowView {
  std::span<const std::uint32_t> index;
  std::span<const double> value;
};

/// Compressed row storage for one view.
class SparseRows {
 public:
  /// Appends a row given as (index, value) pairs in any order. Duplicate
  /// indices are summed and exact zeros are dropped after summation.
  void push_row(std::vector<std::pair<std::uint32_t, double>> entries);

  std::size_t rows() const noexcept { return offsets_.size() - 1; }
  std::size_t nonzeros() const noexcept { return values_.size(); }
  SparseRowView row(std::size_t i) const {
    const auto b = offsets_[i];
    const auto e = offsets_[i + 1];
    return {std::span(indices_).subspan(b, e - b), std::span(values_).subspan(b, e - b)};
  }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

/// Column means, Gram traces and active-feature sets for both views.
struct ViewStats {
  std::size_t n = 0;
  std::vector<double> mu_a;
  std::vector<double> mu_b;
  double trace_a = 0.0;  // Tr(A^T A)
  double trace_b = 0.0;
  std::vector<std::uint32_t> active_a;  // ascending
  std::vector<std::uint32_t> active_b;
};

/// Counts full sweeps over the rows of a dataset. Shared between a dataset,
/// its copies and its compacted form.
class PassCounter {
 public:
  void increment() noexcept { passes_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t value() const noexcept { return passes_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> passes_{0};
};

/// Parameters of the token hasher, remembered by text-ingested datasets.
struct HashConfig {
  unsigned bits = 19;
  std::uint64_t seed = 0;
  friend bool operator==(const HashConfig&, const HashConfig&) = default;
};

/// Row-aligned sparse two-view data, immutable once built.
class TwoViewDataset {
 public:
  TwoViewDataset(std::size_t d_a, std::size_t d_b, SparseRows a, SparseRows b,
                 std::optional<HashConfig> hash = std::nullopt);

  std::size_t n() const noexcept { return a_.rows(); }
  std::size_t d_a() const noexcept { return d_a_; }
  std::size_t d_b() const noexcept { return d_b_; }
  const SparseRows& view_a() const noexcept { return a_; }
  const SparseRows& view_b() const noexcept { return b_; }
  const ViewStats& stats() const noexcept { return stats_; }
  const std::optional<HashConfig>& hash_config() const noexcept { return hash_; }

  PassCounter& passes() const noexcept { return *counter_; }
  std::uint64_t pass_count() const noexcept { return counter_->value(); }

  /// Same rows, fresh pass counter.
  TwoViewDataset with_fresh_counter() const;
  /// Subset of rows in the given order, fresh stats and fresh counter.
  TwoViewDataset select_rows(std::span<const std::size_t> rows) const;

 private:
  friend struct CompactAccess;
  std::size_t d_a_;
  std::size_t d_b_;
  SparseRows a_;
  SparseRows b_;
  ViewStats stats_;
  std::optional<HashConfig> hash_;
  std::shared_ptr<PassCounter> counter_;
};

/// Recomputes statistics from rows in storage order.
ViewStats compute_stats(std::size_t d_a, std::size_t d_b, const SparseRows& a, const SparseRows& b);

// ---------------------------------------------------------------------------
// Ingestion

/// FNV-1a (64-bit) over the token bytes, seed folded into the offset basis.
/// The slot is the low `bits` bits of the hash, the sign the next bit up.
class FeatureHasher {
 public:
  FeatureHasher(unsigned bits, std::uint64_t seed);
  std::uint64_t hash(std::string_view token) const noexcept;
  std::uint32_t slot(std::uint64_t h) const noexcept { return static_cast<std::uint32_t>(h & mask_); }
  double sign(std::uint64_t h) const noexcept { return ((h >> bits_) & 1U) != 0 ? -1.0 : 1.0; }
  std::size_t dimension() const noexcept { return std::size_t{1} << bits_; }
  /// Hashed bag of words for one line of whitespace-separated tokens.
  std::vector<std::pair<std::uint32_t, double>> vectorize(std::string_view line) const;

 private:
  unsigned bits_;
  std::uint64_t basis_;
  std::uint64_t mask_;
};

/// Whitespace tokenization (space, tab, CR, LF, VT, FF).
std::vector<std::string_view> tokenize(std::string_view line);

TwoViewDataset ingest_parallel_text(const std::filesystem::path& path_a, const std::filesystem::path& path_b,
                                    unsigned hash_bits, std::uint64_t hash_seed);

/// `idx:val` rows, 0-based indices.
TwoViewDataset ingest_sparse(const std::filesystem::path& path_a, const std::filesystem::path& path_b,
                             std::size_t d_a, std::size_t d_b);

/// Comma-separated dense rows; the dimension is taken from the first row.
TwoViewDataset ingest_dense_csv(const std::filesystem::path& path_a, const std::filesystem::path& path_b);

/// Builds a dataset from dense row-major blocks (n x d_a and n x d_b).
TwoViewDataset from_dense(const DenseMatrix& a, const DenseMatrix& b);

void write_dense_csv(const std::filesystem::path& path, const SparseRows& rows, std::size_t d);

// ---------------------------------------------------------------------------
// Splitting

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Seeded Fisher-Yates permutation cut at round(n * train_fraction).
SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

std::pair<TwoViewDataset, TwoViewDataset> split(const TwoViewDataset& ds, double train_fraction,
                                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Active-feature compaction

/// Dataset re-indexed onto its active features. Shares the parent's counter.
struct CompactDataset {
  TwoViewDataset data;
  std::vector<std::uint32_t> features_a;  // compact index -> original index
  std::vector<std::uint32_t> features_b;
};

CompactDataset compact(const TwoViewDataset& ds);

/// Scatters compact rows back to a d-row matrix (other rows zero).
DenseMatrix expand_rows(const DenseMatrix& compact_rows, std::span<const std::uint32_t> features, std::size_t d);
/// Gathers the listed rows of a full matrix.
DenseMatrix gather_rows(const DenseMatrix& full, std::span<const std::uint32_t> features);

// ---------------------------------------------------------------------------
// Streaming passes. Each call is exactly one sweep over the rows, in
// ascending row order, and adds one to the dataset's pass counter. With
// `centered`, A and B are replaced by A - 1 mu_a^T and B - 1 mu_b^T through
// rank-one corrections; centered rows are never formed.

enum class View { a, b };

struct CrossImages {
  DenseMatrix y_a;  // Abar^T Bbar Q_b   (d_a x m_b)
  DenseMatrix y_b;  // Bbar^T Abar Q_a   (d_b x m_a)
};

CrossImages pass_crossprod(const TwoViewDataset& ds, const DenseMatrix& q_a, const DenseMatrix& q_b,
                           bool centered);

struct ProjectedProducts {
  DenseMatrix c_a;  // Q_a^T Abar^T Abar Q_a
  DenseMatrix c_b;  // Q_b^T Bbar^T Bbar Q_b
  DenseMatrix f;    // Q_a^T Abar^T Bbar Q_b
};

ProjectedProducts pass_final(const TwoViewDataset& ds, const DenseMatrix& q_a, const DenseMatrix& q_b,
                             bool centered);

/// (Vbar^T Vbar + lambda I) P for the chosen view V.
DenseMatrix pass_gram_apply(const TwoViewDataset& ds, View view, const DenseMatrix& p, double lambda,
                            bool centered);

/// (1/n) Tr(X_a^T Abar^T Bbar X_b).
double objective(const TwoViewDataset& ds, const DenseMatrix& x_a, const DenseMatrix& x_b, bool centered);

}  // namespace rcca::twoview
