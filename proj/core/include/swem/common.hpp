#pragma once

#include <stdexcept>
#include <string>

namespace swem {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: ConfigError -> 1, DataError/FormatError -> 2,
// NumericError -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration or API usage (mismatched shapes, invalid options).
struct ConfigError : Error {
  using Error::Error;
};

// Bad input data (labels out of range, empty examples, unknown tokens where
// none are allowed).
struct DataError : Error {
  using Error::Error;
};

// Malformed input files (CSV quoting, embedding file arity, truncation).
struct FormatError : DataError {
  using DataError::DataError;
};

// Numeric failure during optimization (NaN gradients, diverged loss).
struct NumericError : Error {
  using Error::Error;
};

}  // namespace swem
