#pragma once

#include <stdexcept>
#include <string>

namespace qrlab {

/// Invalid argument outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unusable input data (CSV contents, degenerate designs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExceeded : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateData : public DataError {
 public:
  using DataError::DataError;
};

class SingularGram : public DataError {
 public:
  using DataError::DataError;
};

class RankDeficient : public DataError {
 public:
  using DataError::DataError;
};

class EmptyTestSet : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientRows : public DataError {
 public:
  using DataError::DataError;
};

/// Raised by the fixed-point solver; carries the best iterate it reached.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double best_residual, double tau, double lambda, double b)
      : std::runtime_error(what),
        best_residual_(best_residual),
        tau_(tau),
        lambda_(lambda),
        b_(b) {}

  double best_residual() const { return best_residual_; }
  double tau() const { return tau_; }
  double lambda() const { return lambda_; }
  double b() const { return b_; }

 private:
  double best_residual_;
  double tau_;
  double lambda_;
  double b_;
};

}  // namespace qrlab
