#pragma once

#include <stdexcept>
#include <string>

namespace erase {

/// Bad input: shapes, ranges, labels, configuration. CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure (rank deficiency, divergence, non-convergence). CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficiencyError : public NumericalError {
 public:
  RankDeficiencyError(const std::string& what, int rank, int requested)
      : NumericalError(what), rank_(rank), requested_(requested) {}
  int rank() const noexcept { return rank_; }
  int requested() const noexcept { return requested_; }

 private:
  int rank_;
  int requested_;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IntegrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace erase
