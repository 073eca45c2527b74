#include "rcca/model_file.hpp"

#include <array>
#include <bit>
#include <type_traits>
#include <cstring>
#include <fstream>
#include <string>

#include "rcca/error.hpp"

namespace rcca::cli {
namespace {

constexpr std::array<char, 4> kMagic = {'R', 'C', 'C', 'A'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  static_assert(std::is_unsigned_v<T>);
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw IoError("truncated model file " + path.string());
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const std::filesystem::path& path) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, path));
}

void put_row_major(std::ostream& out, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

DenseMatrix get_row_major(std::istream& in, std::size_t rows, std::size_t cols, const std::filesystem::path& path) {
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = get_f64(in, path);
  return m;
}

}  // namespace

ModelFile to_model_file(const CcaModel& model, std::optional<twoview::HashConfig> hash) {
  return {model.x_a, model.x_b, model.correlations, hash};
}

void write_model_file(const std::filesystem::path& path, const ModelFile& model) {
  const std::size_t k = model.correlations.size();
  if (model.x_a.cols() != k || model.x_b.cols() != k)
    throw DimensionError("model file: X_a " + linalg::shape_string(model.x_a) + ", X_b " +
                         linalg::shape_string(model.x_b) + ", " + std::to_string(k) + " correlations");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("I/O error: cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kModelFileVersion);
  put_le<std::uint64_t>(out, model.x_a.rows());
  put_le<std::uint64_t>(out, model.x_b.rows());
  put_le<std::uint64_t>(out, k);
  put_le<std::uint8_t>(out, model.hash ? 1 : 0);
  if (model.hash) {
    put_le<std::uint32_t>(out, model.hash->bits);
    put_le<std::uint64_t>(out, model.hash->seed);
  }
  put_row_major(out, model.x_a);
  put_row_major(out, model.x_b);
  for (double c : model.correlations) put_f64(out, c);
  if (!out) throw IoError("I/O error: failed writing " + path.string());
}

ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("I/O error: cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw ParseError(path.string() + " is not a model file (bad magic)", 0);
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kModelFileVersion)
    throw ParseError(path.string() + ": unsupported model file version " + std::to_string(version), 0);
  const auto d_a = get_le<std::uint64_t>(in, path);
  const auto d_b = get_le<std::uint64_t>(in, path);
  const auto k = get_le<std::uint64_t>(in, path);
  const auto has_hash = get_le<std::uint8_t>(in, path);
  if (has_hash > 1) throw ParseError(path.string() + ": bad hash flag", 0);

  // Reject headers whose payload could not possibly be present.
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t header = 33 + (has_hash ? 12 : 0);
  in.seekg(33, std::ios::beg);
  if (k != 0 && (d_a > file_size / 8 / k || d_b > file_size / 8 / k || header + 8 * k * (d_a + d_b + 1) != file_size))
    throw ParseError(path.string() + ": size does not match header dimensions", 0);

  ModelFile model;
  if (has_hash) {
    twoview::HashConfig hc;
    hc.bits = get_le<std::uint32_t>(in, path);
    hc.seed = get_le<std::uint64_t>(in, path);
    model.hash = hc;
  }
  model.x_a = get_row_major(in, d_a, k, path);
  model.x_b = get_row_major(in, d_b, k, path);
  model.correlations.resize(k);
  for (double& c : model.correlations) c = get_f64(in, path);
  return model;
}

}  // namespace rcca::cli
