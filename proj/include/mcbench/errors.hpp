#pragma once

#include <stdexcept>
#include <string>

namespace mcbench {

/// Invalid distribution or model parameters.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed input (layout mismatch, bad file contents, out-of-range request).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A forward model or density failed to produce a finite result.
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid sampler or run configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A diagnostic could not establish convergence (burn-in search, divergent NUTS).
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degenerate statistics (zero variance, empty bins where mass is required).
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mcbench
