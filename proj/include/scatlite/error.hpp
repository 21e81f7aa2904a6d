#pragma once

#include <stdexcept>
#include <string>

namespace scatlite {

// Base for every error raised by the library. The CLI maps these to exit
// code 3 ("computation error"); usage problems are caught earlier by CLI11.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid hyperparameters (grid not divisible by 2^J, xi0 >= pi, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor shapes that do not agree with each other or with a filter bank.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in inputs, undefined ratios, degenerate numerical situations.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// SCT1 payload whose CRC32 does not match, or a header that cannot be valid.
class CorruptFileError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace scatlite
