#pragma once

#include <stdexcept>
#include <string>

namespace signforge {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: missing files, empty text, malformed records.
class InputError : public Error {
 public:
  using Error::Error;
};

// Shapes or joint counts that do not line up.
class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

// A file that exists but cannot be parsed.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

// A precondition the caller was supposed to guarantee.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Data that is well formed but cannot be processed (zero scale, all frames flagged).
class DegenerateError : public InputError {
 public:
  using InputError::InputError;
};

// NaN/inf during training or sampling.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace signforge
