#pragma once

#include <stdexcept>
#include <string>

namespace nilpotentizer {

/// Raised when two operands live in different algebras or ambient spaces.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative numeric procedure gives up.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FlowEscaped : public NumericFailure {
 public:
  using NumericFailure::NumericFailure;
};

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& message, std::size_t position)
      : std::invalid_argument(message + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

}  // namespace nilpotentizer
