#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shift_audit {

// Malformed input file. Row/column are 1-based; 0 means "not applicable".
class parse_error : public std::runtime_error {
 public:
  parse_error(std::string message, std::size_t row = 0, std::size_t column = 0)
      : std::runtime_error(std::move(message)), row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

// Incompatible dimensions or state spaces between two inputs.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite or otherwise unusable value.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace shift_audit
