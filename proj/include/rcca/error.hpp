#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcca {

/// A numerical kernel could not complete (indefinite matrix, singular factor, rank collapse).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        detail_(what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }
  /// The message without the line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t line_;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rcca
