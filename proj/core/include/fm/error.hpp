#pragma once

#include <stdexcept>
#include <string>

namespace fm {

/// Inconsistent dimensions, out-of-range parameters, malformed config files.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver ran out of iterations. Carries the residual reached.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual);
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A market instance with no well-defined equilibrium (e.g. a buyer who
/// values nothing that is for sale).
class DegenerateInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite network output or loss during training.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem or parse failure, message includes the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fm
