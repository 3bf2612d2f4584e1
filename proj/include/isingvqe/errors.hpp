#pragma once

#include <stdexcept>
#include <string>

namespace isingvqe {

/// Argument outside the mathematical domain of an operation (bad qubit
/// index, bitstring out of range, unknown pattern name).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller broke a precondition (size mismatch, missing angle, improper
/// partition).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Problem too large for the requested algorithm.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedVarianceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every restart of an optimization failed.
class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; `path()` names the offending field,
/// e.g. "lattice.extents[1]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace isingvqe
