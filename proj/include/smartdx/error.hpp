#pragma once

#include <stdexcept>
#include <string>

namespace smartdx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input documents: missing fields, wrong types, bad enum strings.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain rule (duplicate or missing
/// channels, inconsistent sampling rates, short recordings, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical preconditions that fail at run time (empty subsets, zero
/// variance, non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Cross-validation plans that cannot be realized on the given labels.
class InfeasibleSplitError : public Error {
 public:
  using Error::Error;
};

}  // namespace smartdx
