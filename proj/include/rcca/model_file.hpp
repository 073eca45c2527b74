#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rcca/cca.hpp"
#include "rcca/dense_matrix.hpp"
#include "rcca/twoview.hpp"

namespace rcca::cli {

/// Binary model file, all integers and floats little-endian:
///
///   offset  size          field
///   0       4             magic "RCCA"
///   4       4   u32       version (1)
///   8       8   u64       d_a
///   16      8   u64       d_b
///   24      8   u64       k
///   32      1   u8        has_hash (0 or 1)
///   33      4   u32       hash bits        } only when has_hash = 1
///   37      8   u64       hash seed        }
///   ...     8 d_a k  f64  X_a, row-major
///   ...     8 d_b k  f64  X_b, row-major
///   ...     8 k      f64  correlations
struct ModelFile {
  DenseMatrix x_a;
  DenseMatrix x_b;
  std::vector<double> correlations;
  std::optional<twoview::HashConfig> hash;
};

inline constexpr std::uint32_t kModelFileVersion = 1;

void write_model_file(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model_file(const std::filesystem::path& path);

ModelFile to_model_file(const CcaModel& model, std::optional<twoview::HashConfig> hash);

}  // namespace rcca::cli
