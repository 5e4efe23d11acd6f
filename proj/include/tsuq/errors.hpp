#pragma once

#include <stdexcept>
#include <string>

namespace tsuq {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible vector/matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or floating-point overflow.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its admissible range (p, B, alpha, q, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input data violates an invariant (gaps, duplicates, too short, nonpositive).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Training diverged or failed to produce finite losses.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Binary bundle is corrupt or has an unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsuq
