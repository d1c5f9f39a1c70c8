#pragma once

#include <stdexcept>
#include <string>

namespace t3vae {

// Parameter outside the mathematical domain of an operation (nu <= 0, d < 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke an API contract: mismatched dimensions, incompatible parameters.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Floating point failure: singular matrices, non-finite results.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature refinement did not reach the requested tolerance.
class OracleFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

// The training objective became non-finite.
class TrainingDivergence : public NumericError {
 public:
  TrainingDivergence(const std::string& what, long batch_index)
      : NumericError(what + " (batch " + std::to_string(batch_index) + ")"),
        batch_index_(batch_index) {}

  long batch_index() const noexcept { return batch_index_; }

 private:
  long batch_index_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace t3vae
