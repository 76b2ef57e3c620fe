#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dggat {

/// Shapes of two operands are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation was violated by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Input text could not be parsed. `record` is 0-based (SDF only), `line` 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t record = 0)
      : std::runtime_error(what), line_(line), record_(record) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t line_;
  std::size_t record_;
};

class FeaturizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace dggat
