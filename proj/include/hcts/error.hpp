#pragma once

#include <stdexcept>
#include <string>

namespace hcts {

// Base class of every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An argument or dataset violates a documented precondition.
struct DomainError : Error {
  using Error::Error;
};

// Structural problem in an input file (ragged rows, bad schema, ...).
struct FormatError : Error {
  using Error::Error;
};

// A token could not be converted to a number.
struct ParseError : FormatError {
  using FormatError::FormatError;
};

}  // namespace hcts
