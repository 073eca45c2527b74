#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace rcca::cli {

inline constexpr int kReportFormatVersion = 1;

/// Solver report; serialized with exactly these keys.
struct Report {
  nlohmann::json config = nlohmann::json::object();
  double objective_train = 0.0;
  std::optional<double> objective_test;
  std::vector<double> correlations;
  double feasibility_residual_a = 0.0;
  double feasibility_residual_b = 0.0;
  double cross_offdiag_residual = 0.0;
  std::uint64_t passes_used = 0;
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string solver;
  int format_version = kReportFormatVersion;
};

nlohmann::json to_json(const Report& report);

/// Runs one subcommand. Returns 0 on success, 1 on a runtime failure
/// (message on `err`), 2 on a usage error (usage text on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rcca::cli
