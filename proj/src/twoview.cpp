#include "rcca/twoview.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rcca/error.hpp"
#include "rcca/random.hpp"

namespace rcca::twoview {

// ---------------------------------------------------------------------------
// Storage

void SparseRows::push_row(std::vector<std::pair<std::uint32_t, double>> entries) {
  std::ranges::sort(entries, {}, &std::pair<std::uint32_t, double>::first);
  std::size_t i = 0;
  while (i < entries.size()) {
    const std::uint32_t idx = entries[i].first;
    double sum = 0.0;
    for (; i < entries.size() && entries[i].first == idx; ++i) sum += entries[i].second;
    if (sum != 0.0) {
      indices_.push_back(idx);
      values_.push_back(sum);
    }
  }
  offsets_.push_back(values_.size());
}

ViewStats compute_stats(std::size_t d_a, std::size_t d_b, const SparseRows& a, const SparseRows& b) {
  ViewStats st;
  st.n = a.rows();
  auto accumulate = [&](const SparseRows& rows, std::size_t d, std::vector<double>& mu, double& tr,
                        std::vector<std::uint32_t>& active) {
    mu.assign(d, 0.0);
    std::vector<bool> seen(d, false);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto row = rows.row(r);
      for (std::size_t e = 0; e < row.index.size(); ++e) {
        const double v = row.value[e];
        mu[row.index[e]] += v;
        tr += v * v;
        seen[row.index[e]] = true;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (seen[j]) active.push_back(static_cast<std::uint32_t>(j));
    }
    if (st.n > 0)
      for (double& m : mu) m /= static_cast<double>(st.n);
  };
  accumulate(a, d_a, st.mu_a, st.trace_a, st.active_a);
  accumulate(b, d_b, st.mu_b, st.trace_b, st.active_b);
  return st;
}

TwoViewDataset::TwoViewDataset(std::size_t d_a, std::size_t d_b, SparseRows a, SparseRows b,
                               std::optional<HashConfig> hash)
    : d_a_(d_a), d_b_(d_b), a_(std::move(a)), b_(std::move(b)), hash_(hash),
      counter_(std::make_shared<PassCounter>()) {
  if (a_.rows() != b_.rows())
    throw DimensionError("views are not row-aligned: " + std::to_string(a_.rows()) + " vs " +
                         std::to_string(b_.rows()) + " rows");
  auto check = [](const SparseRows& rows, std::size_t d, const char* name) {
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const auto row = rows.row(r);
      for (std::size_t e = 0; e < row.index.size(); ++e) {
        if (row.index[e] >= d)
          throw DimensionError(std::string("view ") + name + " row " + std::to_string(r) + ": index " +
                               std::to_string(row.index[e]) + " >= dimension " + std::to_string(d));
        if (e > 0 && row.index[e] <= row.index[e - 1])
          throw std::invalid_argument(std::string("view ") + name + " row " + std::to_string(r) +
                                      ": indices not strictly increasing");
      }
    }
  };
  check(a_, d_a_, "A");
  check(b_, d_b_, "B");
  stats_ = compute_stats(d_a_, d_b_, a_, b_);
}

TwoViewDataset TwoViewDataset::with_fresh_counter() const {
  TwoViewDataset copy = *this;
  copy.counter_ = std::make_shared<PassCounter>();
  return copy;
}

namespace {

SparseRows gather(const SparseRows& rows, std::span<const std::size_t> which) {
  SparseRows out;
  for (std::size_t r : which) {
    if (r >= rows.rows()) throw std::out_of_range("row " + std::to_string(r) + " out of range");
    const auto row = rows.row(r);
    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(row.index.size());
    for (std::size_t e = 0; e < row.index.size(); ++e) entries.emplace_back(row.index[e], row.value[e]);
    out.push_row(std::move(entries));
  }
  return out;
}

}  // namespace

TwoViewDataset TwoViewDataset::select_rows(std::span<const std::size_t> rows) const {
  return TwoViewDataset(d_a_, d_b_, gather(a_, rows), gather(b_, rows), hash_);
}

// ---------------------------------------------------------------------------
// Hashing and ingestion

namespace {

constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("I/O error: cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("I/O error: failed reading " + path.string());
  return lines;
}

void check_line_counts(const std::filesystem::path& path_a, std::size_t na, const std::filesystem::path& path_b,
                       std::size_t nb) {
  if (na != nb)
    throw ParseError("line count mismatch: " + path_a.string() + " has " + std::to_string(na) + " lines, " +
                         path_b.string() + " has " + std::to_string(nb),
                     0);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view text, std::size_t line) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ParseError("malformed number '" + std::string(text) + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(text) + "'", line);
  return v;
}

SparseRows parse_sparse_rows(const std::vector<std::string>& lines, std::size_t d) {
  SparseRows rows;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    std::vector<std::pair<std::uint32_t, double>> entries;
    for (std::string_view tok : tokenize(lines[l])) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0)
        throw ParseError("malformed token '" + std::string(tok) + "'", l + 1);
      std::uint64_t idx = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || ptr != tok.data() + colon)
        throw ParseError("malformed token '" + std::string(tok) + "'", l + 1);
      if (idx >= d)
        throw ParseError("index " + std::to_string(idx) + " >= dimension " + std::to_string(d), l + 1);
      entries.emplace_back(static_cast<std::uint32_t>(idx), parse_double(tok.substr(colon + 1), l + 1));
    }
    rows.push_row(std::move(entries));
  }
  return rows;
}

std::pair<SparseRows, std::size_t> parse_dense_rows(const std::vector<std::string>& lines) {
  SparseRows rows;
  std::size_t d = 0;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    std::string_view rest = lines[l];
    if (trim(rest).empty()) throw ParseError("empty row in dense file", l + 1);
    std::vector<std::pair<std::uint32_t, double>> entries;
    std::size_t col = 0;
    for (;;) {
      const auto comma = rest.find(',');
      const double v = parse_double(rest.substr(0, comma), l + 1);
      if (v != 0.0) entries.emplace_back(static_cast<std::uint32_t>(col), v);
      ++col;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (l == 0) d = col;
    if (col != d)
      throw ParseError("expected " + std::to_string(d) + " values, found " + std::to_string(col), l + 1);
    rows.push_row(std::move(entries));
  }
  return {std::move(rows), d};
}

}  // namespace

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

FeatureHasher::FeatureHasher(unsigned bits, std::uint64_t seed)
    : bits_(bits), basis_(kFnvOffsetBasis ^ mix_seed(seed)), mask_((std::uint64_t{1} << bits) - 1) {
  if (bits < 1 || bits > 30) throw std::invalid_argument("hash_bits must be in [1, 30], got " + std::to_string(bits));
}

std::uint64_t FeatureHasher::hash(std::string_view token) const noexcept {
  std::uint64_t h = basis_;
  for (unsigned char c : token) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::vector<std::pair<std::uint32_t, double>> FeatureHasher::vectorize(std::string_view line) const {
  std::vector<std::pair<std::uint32_t, double>> entries;
  for (std::string_view tok : tokenize(line)) {
    const std::uint64_t h = hash(tok);
    entries.emplace_back(slot(h), sign(h));
  }
  return entries;
}

TwoViewDataset ingest_parallel_text(const std::filesystem::path& path_a, const std::filesystem::path& path_b,
                                    unsigned hash_bits, std::uint64_t hash_seed) {
  const FeatureHasher hasher(hash_bits, hash_seed);
  const auto lines_a = read_lines(path_a);
  const auto lines_b = read_lines(path_b);
  check_line_counts(path_a, lines_a.size(), path_b, lines_b.size());
  SparseRows a;
  SparseRows b;
  for (std::size_t i = 0; i < lines_a.size(); ++i) {
    a.push_row(hasher.vectorize(lines_a[i]));
    b.push_row(hasher.vectorize(lines_b[i]));
  }
  return TwoViewDataset(hasher.dimension(), hasher.dimension(), std::move(a), std::move(b),
                        HashConfig{hash_bits, hash_seed});
}

namespace {

// Re-throws a parse error with the file name in front of the message.
template <typename F>
auto naming_file(const std::filesystem::path& path, F&& parse) {
  try {
    return parse();
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

}  // namespace

TwoViewDataset ingest_sparse(const std::filesystem::path& path_a, const std::filesystem::path& path_b,
                             std::size_t d_a, std::size_t d_b) {
  const auto lines_a = read_lines(path_a);
  const auto lines_b = read_lines(path_b);
  check_line_counts(path_a, lines_a.size(), path_b, lines_b.size());
  SparseRows a = naming_file(path_a, [&] { return parse_sparse_rows(lines_a, d_a); });
  SparseRows b = naming_file(path_b, [&] { return parse_sparse_rows(lines_b, d_b); });
  return TwoViewDataset(d_a, d_b, std::move(a), std::move(b));
}

TwoViewDataset ingest_dense_csv(const std::filesystem::path& path_a, const std::filesystem::path& path_b) {
  const auto lines_a = read_lines(path_a);
  const auto lines_b = read_lines(path_b);
  check_line_counts(path_a, lines_a.size(), path_b, lines_b.size());
  auto [a, d_a] = naming_file(path_a, [&] { return parse_dense_rows(lines_a); });
  auto [b, d_b] = naming_file(path_b, [&] { return parse_dense_rows(lines_b); });
  return TwoViewDataset(d_a, d_b, std::move(a), std::move(b));
}

TwoViewDataset from_dense(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows())
    throw DimensionError("from_dense: " + shape_string(a) + " and " + shape_string(b) + " are not row-aligned");
  auto to_rows = [](const DenseMatrix& m) {
    SparseRows rows;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      std::vector<std::pair<std::uint32_t, double>> entries;
      for (std::size_t j = 0; j < m.cols(); ++j)
        if (m(i, j) != 0.0) entries.emplace_back(static_cast<std::uint32_t>(j), m(i, j));
      rows.push_row(std::move(entries));
    }
    return rows;
  };
  return TwoViewDataset(a.cols(), b.cols(), to_rows(a), to_rows(b));
}

void write_dense_csv(const std::filesystem::path& path, const SparseRows& rows, std::size_t d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("I/O error: cannot write " + path.string());
  std::vector<double> dense(d);
  char buf[64];
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    std::ranges::fill(dense, 0.0);
    const auto row = rows.row(r);
    for (std::size_t e = 0; e < row.index.size(); ++e) dense[row.index[e]] = row.value[e];
    for (std::size_t j = 0; j < d; ++j) {
      if (j > 0) out.put(',');
      const auto res = std::to_chars(buf, buf + sizeof buf, dense[j]);
      out.write(buf, res.ptr - buf);
    }
    out.put('\n');
  }
  if (!out) throw IoError("I/O error: failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Splitting

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw std::invalid_argument("train fraction must be in (0, 1], got " + std::to_string(train_fraction));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const auto cut = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  if (cut == 0) throw std::invalid_argument("split leaves the training set empty");
  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
  out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  std::ranges::sort(out.train);
  std::ranges::sort(out.test);
  return out;
}

std::pair<TwoViewDataset, TwoViewDataset> split(const TwoViewDataset& ds, double train_fraction,
                                                 std::uint64_t seed) {
  const SplitIndices idx = split_indices(ds.n(), train_fraction, seed);
  return {ds.select_rows(idx.train), ds.select_rows(idx.test)};
}

// ---------------------------------------------------------------------------
// Compaction

struct CompactAccess {
  static void share_counter(TwoViewDataset& child, const TwoViewDataset& parent) {
    child.counter_ = parent.counter_;
  }
};

namespace {

SparseRows remap(const SparseRows& rows, const std::vector<std::uint32_t>& active) {
  SparseRows out;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto row = rows.row(r);
    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(row.index.size());
    for (std::size_t e = 0; e < row.index.size(); ++e) {
      const auto it = std::ranges::lower_bound(active, row.index[e]);
      entries.emplace_back(static_cast<std::uint32_t>(it - active.begin()), row.value[e]);
    }
    out.push_row(std::move(entries));
  }
  return out;
}

}  // namespace

CompactDataset compact(const TwoViewDataset& ds) {
  const auto& st = ds.stats();
  TwoViewDataset data(st.active_a.size(), st.active_b.size(), remap(ds.view_a(), st.active_a),
                      remap(ds.view_b(), st.active_b), ds.hash_config());
  CompactAccess::share_counter(data, ds);
  return {std::move(data), st.active_a, st.active_b};
}

DenseMatrix expand_rows(const DenseMatrix& compact_rows, std::span<const std::uint32_t> features, std::size_t d) {
  if (compact_rows.rows() != features.size())
    throw DimensionError("expand_rows: " + shape_string(compact_rows) + " for " + std::to_string(features.size()) +
                         " features");
  DenseMatrix full(d, compact_rows.cols());
  for (std::size_t j = 0; j < compact_rows.cols(); ++j)
    for (std::size_t i = 0; i < features.size(); ++i) full(features[i], j) = compact_rows(i, j);
  return full;
}

DenseMatrix gather_rows(const DenseMatrix& full, std::span<const std::uint32_t> features) {
  DenseMatrix out(features.size(), full.cols());
  for (std::size_t j = 0; j < full.cols(); ++j)
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (features[i] >= full.rows()) throw DimensionError("gather_rows: feature beyond " + shape_string(full));
      out(i, j) = full(features[i], j);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Passes

namespace {

// Row-major copy of a tall d x m matrix so each sparse entry touches one
// contiguous row.
struct RowMajor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  explicit RowMajor(const DenseMatrix& m) : rows(m.rows()), cols(m.cols()), data(m.size()) {
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t i = 0; i < rows; ++i) data[i * cols + j] = m(i, j);
  }
  RowMajor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double* row(std::size_t i) { return data.data() + i * cols; }

  DenseMatrix to_dense() const {
    DenseMatrix m(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t i = 0; i < rows; ++i) m(i, j) = data[i * cols + j];
    return m;
  }
};

// out = x^T Q for sparse x
void sparse_times(const SparseRowView& x, const RowMajor& q, std::vector<double>& out) {
  std::ranges::fill(out, 0.0);
  for (std::size_t e = 0; e < x.index.size(); ++e) {
    const double v = x.value[e];
    const double* qr = q.row(x.index[e]);
    for (std::size_t j = 0; j < q.cols; ++j) out[j] += v * qr[j];
  }
}

// out += x r^T for sparse x
void scatter_outer(const SparseRowView& x, const std::vector<double>& r, RowMajor& out) {
  for (std::size_t e = 0; e < x.index.size(); ++e) {
    const double v = x.value[e];
    double* dst = out.row(x.index[e]);
    for (std::size_t j = 0; j < out.cols; ++j) dst[j] += v * r[j];
  }
}

// mu^T Q over the active features only
std::vector<double> mean_times(const std::vector<double>& mu, const std::vector<std::uint32_t>& active,
                               const RowMajor& q) {
  std::vector<double> s(q.cols, 0.0);
  for (std::uint32_t i : active) {
    const double* qr = q.row(i);
    for (std::size_t j = 0; j < q.cols; ++j) s[j] += mu[i] * qr[j];
  }
  return s;
}

// out -= n mu s^T
void subtract_mean_outer(double n, const std::vector<double>& mu, const std::vector<std::uint32_t>& active,
                         const std::vector<double>& s, RowMajor& out) {
  for (std::uint32_t i : active) {
    double* dst = out.row(i);
    for (std::size_t j = 0; j < out.cols; ++j) dst[j] -= n * mu[i] * s[j];
  }
}

void add_outer(DenseMatrix& m, const std::vector<double>& x, const std::vector<double>& y, double scale) {
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double yj = scale * y[j];
    auto mj = m.col(j);
    for (std::size_t i = 0; i < x.size(); ++i) mj[i] += x[i] * yj;
  }
}

void require_rows(const DenseMatrix& m, std::size_t d, const char* what) {
  if (m.rows() != d)
    throw DimensionError(std::string(what) + " is " + shape_string(m) + " but the view has dimension " +
                         std::to_string(d));
}

}  // namespace

CrossImages pass_crossprod(const TwoViewDataset& ds, const DenseMatrix& q_a, const DenseMatrix& q_b,
                           bool centered) {
  require_rows(q_a, ds.d_a(), "Q_a");
  require_rows(q_b, ds.d_b(), "Q_b");
  const RowMajor qa(q_a);
  const RowMajor qb(q_b);
  RowMajor ya(ds.d_a(), qb.cols);
  RowMajor yb(ds.d_b(), qa.cols);
  std::vector<double> ra(qa.cols);
  std::vector<double> rb(qb.cols);
  for (std::size_t r = 0; r < ds.n(); ++r) {
    const auto a = ds.view_a().row(r);
    const auto b = ds.view_b().row(r);
    sparse_times(a, qa, ra);
    sparse_times(b, qb, rb);
    scatter_outer(a, rb, ya);
    scatter_outer(b, ra, yb);
  }
  if (centered) {
    const auto& st = ds.stats();
    const double n = static_cast<double>(ds.n());
    subtract_mean_outer(n, st.mu_a, st.active_a, mean_times(st.mu_b, st.active_b, qb), ya);
    subtract_mean_outer(n, st.mu_b, st.active_b, mean_times(st.mu_a, st.active_a, qa), yb);
  }
  ds.passes().increment();
  return {ya.to_dense(), yb.to_dense()};
}

ProjectedProducts pass_final(const TwoViewDataset& ds, const DenseMatrix& q_a, const DenseMatrix& q_b,
                             bool centered) {
  require_rows(q_a, ds.d_a(), "Q_a");
  require_rows(q_b, ds.d_b(), "Q_b");
  const RowMajor qa(q_a);
  const RowMajor qb(q_b);
  ProjectedProducts out{DenseMatrix(qa.cols, qa.cols), DenseMatrix(qb.cols, qb.cols), DenseMatrix(qa.cols, qb.cols)};
  std::vector<double> ra(qa.cols);
  std::vector<double> rb(qb.cols);
  for (std::size_t r = 0; r < ds.n(); ++r) {
    sparse_times(ds.view_a().row(r), qa, ra);
    sparse_times(ds.view_b().row(r), qb, rb);
    add_outer(out.c_a, ra, ra, 1.0);
    add_outer(out.c_b, rb, rb, 1.0);
    add_outer(out.f, ra, rb, 1.0);
  }
  if (centered) {
    const auto& st = ds.stats();
    const double n = static_cast<double>(ds.n());
    const auto sa = mean_times(st.mu_a, st.active_a, qa);
    const auto sb = mean_times(st.mu_b, st.active_b, qb);
    add_outer(out.c_a, sa, sa, -n);
    add_outer(out.c_b, sb, sb, -n);
    add_outer(out.f, sa, sb, -n);
  }
  ds.passes().increment();
  return out;
}

DenseMatrix pass_gram_apply(const TwoViewDataset& ds, View view, const DenseMatrix& p, double lambda,
                            bool centered) {
  if (lambda < 0.0) throw std::invalid_argument("pass_gram_apply: negative lambda");
  const bool is_a = view == View::a;
  const SparseRows& rows = is_a ? ds.view_a() : ds.view_b();
  const std::size_t d = is_a ? ds.d_a() : ds.d_b();
  require_rows(p, d, "P");
  const RowMajor pr(p);
  RowMajor out(d, pr.cols);
  std::vector<double> r(pr.cols);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto x = rows.row(i);
    sparse_times(x, pr, r);
    scatter_outer(x, r, out);
  }
  if (centered) {
    const auto& st = ds.stats();
    const auto& mu = is_a ? st.mu_a : st.mu_b;
    const auto& active = is_a ? st.active_a : st.active_b;
    subtract_mean_outer(static_cast<double>(ds.n()), mu, active, mean_times(mu, active, pr), out);
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < pr.cols; ++j) out.row(i)[j] += lambda * pr.row(i)[j];
  ds.passes().increment();
  return out.to_dense();
}

double objective(const TwoViewDataset& ds, const DenseMatrix& x_a, const DenseMatrix& x_b, bool centered) {
  if (ds.n() == 0) throw std::invalid_argument("objective: dataset has no rows");
  require_rows(x_a, ds.d_a(), "X_a");
  require_rows(x_b, ds.d_b(), "X_b");
  if (x_a.cols() != x_b.cols())
    throw DimensionError("objective: X_a is " + shape_string(x_a) + ", X_b is " + shape_string(x_b));
  const RowMajor xa(x_a);
  const RowMajor xb(x_b);
  std::vector<double> ra(xa.cols);
  std::vector<double> rb(xb.cols);
  double sum = 0.0;
  for (std::size_t r = 0; r < ds.n(); ++r) {
    sparse_times(ds.view_a().row(r), xa, ra);
    sparse_times(ds.view_b().row(r), xb, rb);
    for (std::size_t j = 0; j < ra.size(); ++j) sum += ra[j] * rb[j];
  }
  const double n = static_cast<double>(ds.n());
  if (centered) {
    const auto& st = ds.stats();
    const auto sa = mean_times(st.mu_a, st.active_a, xa);
    const auto sb = mean_times(st.mu_b, st.active_b, xb);
    for (std::size_t j = 0; j < sa.size(); ++j) sum -= n * sa[j] * sb[j];
  }
  ds.passes().increment();
  return sum / n;
}

}  // namespace rcca::twoview
