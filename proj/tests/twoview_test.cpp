#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "rcca/error.hpp"
#include "rcca/twoview.hpp"
#include "test_support.hpp"

using namespace rcca;
using namespace rcca::twoview;
using testing::center_columns;
using testing::max_diff;
using testing::naive_mul;
using testing::naive_t;
using testing::random_matrix;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Hand-rolled hash, written from the documented recipe only.
std::uint64_t reference_hash(const std::string& token, std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  std::uint64_t h = 14695981039346656037ULL ^ z;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::map<std::uint32_t, double> reference_bag(const std::vector<std::string>& tokens, unsigned bits,
                                              std::uint64_t seed) {
  std::map<std::uint32_t, double> bag;
  for (const auto& t : tokens) {
    const std::uint64_t h = reference_hash(t, seed);
    bag[static_cast<std::uint32_t>(h % (std::uint64_t{1} << bits))] += ((h >> bits) & 1) ? -1.0 : 1.0;
  }
  std::erase_if(bag, [](const auto& kv) { return kv.second == 0.0; });
  return bag;
}

std::map<std::uint32_t, double> row_map(const SparseRows& rows, std::size_t i) {
  std::map<std::uint32_t, double> m;
  const auto r = rows.row(i);
  for (std::size_t t = 0; t < r.index.size(); ++t) m[r.index[t]] = r.value[t];
  return m;
}

DenseMatrix dense_of(const SparseRows& rows, std::size_t d) {
  DenseMatrix m(rows.rows(), d);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t t = 0; t < r.index.size(); ++t) m(i, r.index[t]) = r.value[t];
  }
  return m;
}

// Sparse-ish random data so compaction and zero rows get exercised.
DenseMatrix sparse_random(std::size_t n, std::size_t d, std::uint64_t seed, double mean) {
  DenseMatrix m = random_matrix(n, d, seed);
  Rng rng(seed ^ 0xabcdef);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < n; ++i) m(i, j) = rng.uniform() < 0.4 ? 0.0 : m(i, j) + mean;
  return m;
}

}  // namespace

TEST_CASE("hasher matches the documented FNV-1a recipe") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xffffffffffffffffULL}) {
    const FeatureHasher h(19, seed);
    for (const char* tok : {"", "a", "the", "Übersetzung", "token-with-dash"}) {
      const std::uint64_t expected = reference_hash(tok, seed);
      CHECK(h.hash(tok) == expected);
      CHECK(h.slot(expected) == (expected & ((1ULL << 19) - 1)));
      CHECK(h.sign(expected) == (((expected >> 19) & 1) ? -1.0 : 1.0));
    }
  }
  // FNV-1a of the empty string is the offset basis itself.
  const FeatureHasher plain(8, 0);
  CHECK(reference_hash("", 0) == (14695981039346656037ULL ^ mix_seed(0)));
  CHECK(plain.dimension() == 256);
  CHECK_THROWS_AS(FeatureHasher(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(FeatureHasher(31, 0), std::invalid_argument);
}

TEST_CASE("tokenize splits on whitespace only") {
  const auto t = tokenize("  a\tb  c,d\r\n");
  REQUIRE(t.size() == 3);
  CHECK(t[0] == "a");
  CHECK(t[1] == "b");
  CHECK(t[2] == "c,d");
  CHECK(tokenize("").empty());
}

TEST_CASE("parallel text ingestion of a small pair") {
  const auto dir = testing::scratch_dir("text_small");
  write_file(dir / "a.txt", "a b a\n");
  write_file(dir / "b.txt", "x\n");
  const TwoViewDataset ds = ingest_parallel_text(dir / "a.txt", dir / "b.txt", 19, 0);
  REQUIRE(ds.n() == 1);
  CHECK(ds.d_a() == (1u << 19));
  CHECK(ds.d_b() == (1u << 19));
  CHECK(row_map(ds.view_a(), 0) == reference_bag({"a", "b", "a"}, 19, 0));
  CHECK(row_map(ds.view_b(), 0) == reference_bag({"x"}, 19, 0));
  CHECK(ds.view_a().row(0).index.size() <= 2);
  for (double v : ds.view_a().row(0).value) CHECK((std::abs(v) == 1.0 || std::abs(v) == 2.0));
  REQUIRE(ds.view_b().row(0).value.size() == 1);
  CHECK(std::abs(ds.view_b().row(0).value[0]) == 1.0);
  REQUIRE(ds.hash_config().has_value());
  CHECK(ds.hash_config()->bits == 19);
  CHECK(ds.pass_count() == 0);
}

TEST_CASE("parallel text ingestion with empty lines and several seeds") {
  const auto dir = testing::scratch_dir("text_empty");
  write_file(dir / "a.txt", "the cat sat\n\non the mat the end\n");
  write_file(dir / "b.txt", "le chat\n\nsur le tapis\n");
  for (std::uint64_t seed : {0ULL, 3ULL, 99ULL}) {
    const TwoViewDataset ds = ingest_parallel_text(dir / "a.txt", dir / "b.txt", 6, seed);
    REQUIRE(ds.n() == 3);
    CHECK(ds.view_a().row(1).index.empty());
    CHECK(ds.view_b().row(1).index.empty());
    CHECK(row_map(ds.view_a(), 2) == reference_bag({"on", "the", "mat", "the", "end"}, 6, seed));
    CHECK(row_map(ds.view_b(), 2) == reference_bag({"sur", "le", "tapis"}, 6, seed));
  }
}

TEST_CASE("parallel text ingestion errors") {
  const auto dir = testing::scratch_dir("text_errors");
  write_file(dir / "a.txt", "one\ntwo\nthree\n");
  write_file(dir / "b.txt", "un\ndeux\n");
  try {
    (void)ingest_parallel_text(dir / "a.txt", dir / "b.txt", 10, 0);
    FAIL("expected a line count error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('2') != std::string::npos);
  }
  CHECK_THROWS_AS(ingest_parallel_text(dir / "missing.txt", dir / "b.txt", 10, 0), IoError);
  CHECK_THROWS_AS(ingest_parallel_text(dir / "a.txt", dir / "a.txt", 0, 0), std::invalid_argument);
}

TEST_CASE("sparse ingestion") {
  const auto dir = testing::scratch_dir("sparse");
  write_file(dir / "a.txt", "0:1 2:3\n\n3:-1.5 1:2\n");
  write_file(dir / "b.txt", "1:1\n0:2\n\n");
  const TwoViewDataset ds = ingest_sparse(dir / "a.txt", dir / "b.txt", 4, 2);
  REQUIRE(ds.n() == 3);
  const DenseMatrix a = dense_of(ds.view_a(), 4);
  CHECK(max_diff(a, DenseMatrix::from_rows({{1, 0, 3, 0}, {0, 0, 0, 0}, {0, 2, 0, -1.5}})) == 0.0);
  CHECK(ds.view_b().row(2).index.empty());
  CHECK(ds.stats().trace_a == doctest::Approx(1 + 9 + 4 + 2.25));
  CHECK(ds.stats().active_a == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(ds.stats().mu_b[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("sparse ingestion errors carry the line") {
  const auto dir = testing::scratch_dir("sparse_errors");
  write_file(dir / "a.txt", "0:1\n5:1\n");
  write_file(dir / "b.txt", "0:1\n0:1\n");
  try {
    (void)ingest_sparse(dir / "a.txt", dir / "b.txt", 4, 2);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).rfind("line 2: ", 0) == 0);
  }
  write_file(dir / "c.txt", "0:1\n1-2\n");
  CHECK_THROWS_AS(ingest_sparse(dir / "c.txt", dir / "b.txt", 4, 2), ParseError);
  write_file(dir / "d.txt", "0:x\n0:1\n");
  CHECK_THROWS_AS(ingest_sparse(dir / "d.txt", dir / "b.txt", 4, 2), ParseError);
}

TEST_CASE("dense csv round trip") {
  const auto dir = testing::scratch_dir("dense");
  const DenseMatrix a = sparse_random(7, 3, 5, 0.0);
  const DenseMatrix b = sparse_random(7, 2, 6, 1.0);
  const TwoViewDataset ds = from_dense(a, b);
  write_dense_csv(dir / "a.csv", ds.view_a(), ds.d_a());
  write_dense_csv(dir / "b.csv", ds.view_b(), ds.d_b());
  const TwoViewDataset back = ingest_dense_csv(dir / "a.csv", dir / "b.csv");
  CHECK(back.d_a() == 3);
  CHECK(back.d_b() == 2);
  CHECK(dense_of(back.view_a(), 3) == a);
  CHECK(dense_of(back.view_b(), 2) == b);
  write_file(dir / "bad.csv", "1,2,3\n1,2\n1,2,3\n1,2,3\n1,2,3\n1,2,3\n1,2,3\n");
  try {
    ingest_dense_csv(dir / "bad.csv", dir / "b.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()) == "line 2: " + (dir / "bad.csv").string() + ": expected 3 values, found 2");
  }
}

TEST_CASE("push_row sorts, merges duplicates and drops zeros") {
  SparseRows rows;
  rows.push_row({{3, 1.0}, {1, 2.0}, {3, -1.0}, {0, 0.5}});
  const auto r = rows.row(0);
  REQUIRE(r.index.size() == 2);
  CHECK(r.index[0] == 0);
  CHECK(r.index[1] == 1);
}

TEST_CASE("dataset validation") {
  SparseRows a;
  a.push_row({{4, 1.0}});
  SparseRows b;
  b.push_row({{0, 1.0}});
  CHECK_THROWS_AS(TwoViewDataset(4, 1, a, b), DimensionError);
  SparseRows b2;
  CHECK_THROWS_AS(TwoViewDataset(5, 1, a, b2), DimensionError);
}

TEST_CASE("stats recompute exactly") {
  const TwoViewDataset ds = from_dense(sparse_random(30, 6, 8, 0.5), sparse_random(30, 4, 9, -1.0));
  const ViewStats again = compute_stats(ds.d_a(), ds.d_b(), ds.view_a(), ds.view_b());
  CHECK(again.trace_a == ds.stats().trace_a);
  CHECK(again.trace_b == ds.stats().trace_b);
  CHECK(again.mu_a == ds.stats().mu_a);
  CHECK(again.mu_b == ds.stats().mu_b);
  CHECK(again.n == 30);
}

TEST_CASE("split sizes, partition and determinism") {
  const TwoViewDataset ds = from_dense(random_matrix(10, 2, 1), random_matrix(10, 2, 2));
  const auto [train, test] = split(ds, 0.9, 7);
  CHECK(train.n() == 9);
  CHECK(test.n() == 1);
  CHECK(split_indices(10, 0.9, 7).train == split_indices(10, 0.9, 7).train);
  const auto all = split(ds, 1.0, 7);
  CHECK(all.first.n() == 10);
  CHECK(all.second.n() == 0);
  CHECK_THROWS_AS(split_indices(10, 0.01, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(10, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_indices(10, 1.5, 0), std::invalid_argument);

  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t n = 1 + seed * 7;
    const double f = 0.3 + 0.025 * static_cast<double>(seed);
    const auto cut = static_cast<std::size_t>(std::llround(static_cast<double>(n) * f));
    if (cut == 0) {
      CHECK_THROWS_AS(split_indices(n, f, seed), std::invalid_argument);
      continue;
    }
    const SplitIndices s = split_indices(n, f, seed);
    CHECK(s.train.size() == cut);
    CHECK(s.test.size() == n - cut);
    std::set<std::size_t> seen(s.train.begin(), s.train.end());
    seen.insert(s.test.begin(), s.test.end());
    CHECK(seen.size() == n);
    CHECK(*seen.rbegin() == n - 1);
  }
}

TEST_CASE("split carries fresh stats") {
  const TwoViewDataset ds = from_dense(random_matrix(20, 3, 3), random_matrix(20, 3, 4));
  const auto [train, test] = split(ds, 0.5, 1);
  const ViewStats s = compute_stats(train.d_a(), train.d_b(), train.view_a(), train.view_b());
  CHECK(s.trace_a == train.stats().trace_a);
  CHECK(train.stats().n == 10);
}

TEST_CASE("pass_crossprod small cases") {
  const TwoViewDataset ds =
      from_dense(DenseMatrix::from_rows({{1, 0}, {0, 1}}), DenseMatrix::from_rows({{2, 0}, {0, 3}}));
  const CrossImages zero = pass_crossprod(ds, DenseMatrix(2, 2), DenseMatrix(2, 2), false);
  CHECK(max_abs(zero.y_a) == 0.0);
  const CrossImages y = pass_crossprod(ds, DenseMatrix::identity(2), DenseMatrix::identity(2), false);
  CHECK(max_diff(y.y_a, DenseMatrix::from_rows({{2, 0}, {0, 3}})) == 0.0);
  CHECK(max_diff(y.y_b, DenseMatrix::from_rows({{2, 0}, {0, 3}})) == 0.0);
  CHECK(ds.pass_count() == 2);
  CHECK_THROWS_AS(pass_crossprod(ds, DenseMatrix(3, 1), DenseMatrix(2, 1), false), DimensionError);
}

TEST_CASE("pass_final small cases") {
  const TwoViewDataset eye = from_dense(DenseMatrix::identity(3), DenseMatrix::identity(3));
  const DenseMatrix q = testing::mgs(random_matrix(3, 2, 17));
  CHECK(max_abs_deviation_from_identity(pass_final(eye, q, q, false).c_a) < 1e-15);

  const TwoViewDataset one = from_dense(DenseMatrix::from_rows({{1, 2}}), DenseMatrix::from_rows({{1, 1}}));
  const ProjectedProducts p = pass_final(one, DenseMatrix::identity(2), DenseMatrix::identity(2), false);
  CHECK(max_diff(p.c_a, DenseMatrix::from_rows({{1, 2}, {2, 4}})) == 0.0);
  CHECK(max_diff(p.f, DenseMatrix::from_rows({{1, 1}, {2, 2}})) == 0.0);
}

TEST_CASE("pass_gram_apply small cases") {
  const TwoViewDataset ds = from_dense(DenseMatrix(4, 3), DenseMatrix(4, 2));
  const DenseMatrix p = random_matrix(3, 2, 1);
  CHECK(max_abs(pass_gram_apply(ds, View::a, DenseMatrix(3, 2), 0.7, false)) == 0.0);
  CHECK(max_diff(pass_gram_apply(ds, View::a, p, 1.0, false), p) == 0.0);
  CHECK(max_diff(pass_gram_apply(ds, View::a, p, 1.0, true), p) == 0.0);
  CHECK_THROWS_AS(pass_gram_apply(ds, View::a, p, -1.0, false), std::invalid_argument);
  CHECK_THROWS_AS(pass_gram_apply(ds, View::b, p, 1.0, false), DimensionError);
}

TEST_CASE("every pass matches dense products, centered and not") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 5 + (seed * 13) % 96;
    const std::size_t da = 2 + seed % 19;
    const std::size_t db = 2 + (seed * 5) % 19;
    const DenseMatrix a = sparse_random(n, da, 1000 + seed, 1.5);
    const DenseMatrix b = sparse_random(n, db, 2000 + seed, -0.5);
    const TwoViewDataset ds = from_dense(a, b);
    const DenseMatrix qa = random_matrix(da, 3, 3000 + seed);
    const DenseMatrix qb = random_matrix(db, 4, 4000 + seed);
    for (bool centered : {false, true}) {
      const DenseMatrix ab = centered ? center_columns(a) : a;
      const DenseMatrix bb = centered ? center_columns(b) : b;
      const std::uint64_t before = ds.pass_count();
      const CrossImages y = pass_crossprod(ds, qa, qb, centered);
      CHECK(max_diff(y.y_a, naive_mul(naive_t(ab), naive_mul(bb, qb))) <= 1e-10);
      CHECK(max_diff(y.y_b, naive_mul(naive_t(bb), naive_mul(ab, qa))) <= 1e-10);
      const DenseMatrix qb3 = qb.middle_cols(0, 3);
      const ProjectedProducts p = pass_final(ds, qa, qb3, centered);
      const DenseMatrix aq = naive_mul(ab, qa);
      const DenseMatrix bq = naive_mul(bb, qb3);
      CHECK(max_diff(p.c_a, naive_mul(naive_t(aq), aq)) <= 1e-10);
      CHECK(max_diff(p.c_b, naive_mul(naive_t(bq), bq)) <= 1e-10);
      CHECK(max_diff(p.f, naive_mul(naive_t(aq), bq)) <= 1e-10);
      const DenseMatrix ga = pass_gram_apply(ds, View::a, qa, 0.3, centered);
      CHECK(max_diff(ga, naive_mul(naive_t(ab), aq) + 0.3 * qa) <= 1e-10);
      const DenseMatrix gb = pass_gram_apply(ds, View::b, qb, 0.0, centered);
      CHECK(max_diff(gb, naive_mul(naive_t(bb), naive_mul(bb, qb))) <= 1e-10);
      const double obj = objective(ds, qa, qb3, centered);
      CHECK(std::abs(obj - trace(naive_mul(naive_t(aq), bq)) / static_cast<double>(n)) <= 1e-10);
      CHECK(ds.pass_count() == before + 5);
    }
  }
}

TEST_CASE("objective special cases") {
  const DenseMatrix a = random_matrix(50, 4, 77);
  const TwoViewDataset ds = from_dense(a, a);
  CHECK(objective(ds, DenseMatrix(4, 2), random_matrix(4, 2, 1), false) == 0.0);
  // X = sqrt(n) Ma^{-1/2} E_k whitens A exactly; with B = A the objective is k.
  auto [ev, vecs] = testing::jacobi_eigen(naive_mul(naive_t(a), a));
  DenseMatrix x(4, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 4; ++i) x(i, j) = std::sqrt(50.0) * vecs(i, j) / std::sqrt(ev[j]);
  CHECK(objective(ds, x, x, false) == doctest::Approx(3.0).epsilon(1e-8));
  const TwoViewDataset empty = from_dense(DenseMatrix(0, 4), DenseMatrix(0, 4));
  CHECK_THROWS_AS(objective(empty, x, x, false), std::invalid_argument);
}

TEST_CASE("pass counter is shared with compacted and copied datasets") {
  DenseMatrix a = random_matrix(10, 5, 1);
  for (std::size_t i = 0; i < 10; ++i) a(i, 2) = 0.0;
  const TwoViewDataset ds = from_dense(a, random_matrix(10, 3, 2));
  const CompactDataset cd = compact(ds);
  CHECK(cd.data.d_a() == 4);
  CHECK(cd.features_a == std::vector<std::uint32_t>{0, 1, 3, 4});
  (void)pass_crossprod(cd.data, DenseMatrix(4, 1), DenseMatrix(3, 1), true);
  CHECK(ds.pass_count() == 1);
  const TwoViewDataset copy = ds;
  (void)objective(copy, DenseMatrix(5, 1), DenseMatrix(3, 1), false);
  CHECK(ds.pass_count() == 2);
  CHECK(ds.with_fresh_counter().pass_count() == 0);

  const DenseMatrix full = random_matrix(5, 2, 3);
  const DenseMatrix back = expand_rows(gather_rows(full, cd.features_a), cd.features_a, 5);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(back(2, j) == 0.0);
    CHECK(back(4, j) == full(4, j));
  }
}

TEST_CASE("centered passes agree with compacted data") {
  const DenseMatrix a = sparse_random(40, 12, 61, 2.0);
  const DenseMatrix b = sparse_random(40, 9, 62, 0.0);
  const TwoViewDataset ds = from_dense(a, b);
  const CompactDataset cd = compact(ds);
  const DenseMatrix qb = random_matrix(9, 2, 63);
  const DenseMatrix y_full = pass_crossprod(ds, DenseMatrix(12, 0), qb, true).y_a;
  const DenseMatrix y_cmp = pass_crossprod(cd.data, DenseMatrix(cd.data.d_a(), 0), gather_rows(qb, cd.features_b), true).y_a;
  CHECK(max_diff(expand_rows(y_cmp, cd.features_a, 12), y_full) <= 1e-12);
}
