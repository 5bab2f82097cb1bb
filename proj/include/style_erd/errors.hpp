#pragma once

#include <stdexcept>
#include <string>

namespace style_erd {

// Tensor or sequence dimensions disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A value lies outside the domain an operation interprets (e.g. a non-unit
// quaternion handed to a rotation op).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Index or coefficient outside its permitted range.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Operation called on an object in the wrong lifecycle state.
class LifecycleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// API misuse that is neither a shape nor a range problem.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// NaN/Inf produced by a primitive or loss term.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training data does not satisfy the task protocol.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training data lacks a label class an operation needs.
class CoverageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Frame-rate conversion that is not an integer decimation.
class UnsupportedRateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace style_erd
