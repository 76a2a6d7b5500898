#ifndef ROBINCOL_ERROR_HPP
#define ROBINCOL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace robincol {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain of an operation (bad parameters, x outside [0, ell], ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature did not reach its tolerance within the subdivision budget.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double estimate, double error)
      : Error(what), estimate_(estimate), error_(error) {}
  double estimate() const noexcept { return estimate_; }
  double error_estimate() const noexcept { return error_; }

 private:
  double estimate_;
  double error_;
};

/// Root bracketing or refinement failed.
class RootError : public Error {
 public:
  using Error::Error;
};

/// Overflow or another floating-point failure in an otherwise valid evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace robincol

#endif  // ROBINCOL_ERROR_HPP
