#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rbreg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A distribution or model parameter outside its admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public Error {
 public:
  using Error::Error;
};

// Cholesky factorization failed at every jitter level that was tried.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, std::vector<double> jitter_levels)
      : Error(what), jitter_levels_(std::move(jitter_levels)) {}

  const std::vector<double>& jitter_levels() const { return jitter_levels_; }

 private:
  std::vector<double> jitter_levels_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double final_objective, int iterations)
      : Error(what), final_objective_(final_objective), iterations_(iterations) {}

  double final_objective() const { return final_objective_; }
  int iterations() const { return iterations_; }

 private:
  double final_objective_;
  int iterations_;
};

// Raised by the chain runner; carries the sweep index at which the failure happened.
class ChainError : public Error {
 public:
  ChainError(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}

  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace rbreg
