// Error types shared by every module.
//
// ArgumentError covers bad inputs and violated preconditions, NumericError
// covers solver, quadrature and convergence failures, IoError covers files
// and schemas. The CLI maps them onto exit codes 2, 3 and 4.

#ifndef TLPRED_ERROR_HPP
#define TLPRED_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tlpred {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of the operation (e.g. t⁻¹(0)).
class DomainError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tlpred

#endif  // TLPRED_ERROR_HPP
