#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "rcca/dense_matrix.hpp"

namespace rcca {

/// Seedable generator used everywhere randomness enters: std::mt19937_64 for
/// raw bits, 53-bit uniforms, Box-Muller normals, rejection-sampled bounded
/// integers. The derived distributions are implemented here rather than with
/// <random>'s distributions so that streams are identical across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Standard normal.
  double gaussian();
  /// Uniform on {0, ..., bound - 1}; bound > 0.
  std::uint64_t below(std::uint64_t bound);

  /// rows x cols of i.i.d. standard normals, filled row by row.
  DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace rcca
