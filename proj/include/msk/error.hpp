#pragma once

#include <stdexcept>
#include <string>

namespace msk {

// Exception hierarchy used throughout the core. The C API maps each kind to a
// distinct status code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor / array dimensions.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// NaN, Inf, divergence, singular systems.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Precondition violated by caller-supplied arguments or configuration.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Malformed or unreadable file, missing field, I/O failure.
class IoError : public Error {
public:
  using Error::Error;
};

/// A generated or loaded artifact violates a domain invariant.
class InvariantError : public Error {
public:
  using Error::Error;
};

} // namespace msk
