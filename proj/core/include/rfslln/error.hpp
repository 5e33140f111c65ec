#pragma once

#include <stdexcept>
#include <string>

namespace rfslln {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad index, r <= 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A table or enumeration would exceed its configured budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// The inputs cannot satisfy the hypothesis an operation needs
/// (divergent series, unsatisfiable maximal bound, ...).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfslln
