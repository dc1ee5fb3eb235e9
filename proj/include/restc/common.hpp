#pragma once

#include <stdexcept>
#include <string>

namespace restc {

using Scalar = double;

// Error taxonomy; the CLI maps these onto exit codes (usage=1, data=2, numeric=3).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad flags, bad config values, incompatible settings.
struct UsageError : Error {
  using Error::Error;
};

// Missing/unreadable/malformed input files, empty datasets, index ranges.
struct DataError : Error {
  using Error::Error;
};

// Non-finite losses or gradients during training.
struct NumericError : Error {
  using Error::Error;
};

// Tensor contract violations (shape mismatches, non-scalar backward, ...).
struct ShapeError : Error {
  using Error::Error;
};

}  // namespace restc
