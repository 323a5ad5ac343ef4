#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phispline {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class KernelError : public Error {
 public:
  using Error::Error;
};

/// Raised when a Gram matrix is not numerically positive definite.
/// `pivot` is the zero-based row at which the Cholesky recurrence broke down.
class FactorizationError : public Error {
 public:
  FactorizationError(std::size_t pivot, double condition_estimate)
      : Error("Gram matrix is not numerically positive definite: pivot " + std::to_string(pivot) +
              ", condition estimate " + std::to_string(condition_estimate)),
        pivot_(pivot),
        condition_estimate_(condition_estimate) {}

  std::size_t pivot() const noexcept { return pivot_; }
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  std::size_t pivot_;
  double condition_estimate_;
};

}  // namespace phispline
