#pragma once

#include <stdexcept>
#include <string>

namespace kss {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (bad dimension,
/// point off the sphere, chart argument outside the unit ball, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A quadrature or Monte Carlo estimate did not converge or hit a
/// non-finite integrand value.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed (e.g. a covariance matrix that is not
/// positive semidefinite). Signals a formula bug rather than bad input.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// The requested mesh is too coarse for the polynomial degree.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& what, int required_level)
      : Error(what), required_level_(required_level) {}
  int required_level() const noexcept { return required_level_; }

 private:
  int required_level_;
};

}  // namespace kss
