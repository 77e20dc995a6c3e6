#pragma once

#include <stdexcept>
#include <string>

namespace glonet {

// All library failures are typed exceptions so callers (and the CLI exit-code
// mapping) can distinguish validation problems from numeric faults and I/O.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor dimension mismatch; message carries both shapes.
struct ShapeError : Error {
  using Error::Error;
};

/// Invalid configuration value (hyperparameter, depth, fraction, ...).
struct ConfigError : Error {
  using Error::Error;
};

/// API misuse: non-scalar loss backward, wrong model family, empty input list.
struct UsageError : Error {
  using Error::Error;
};

/// Malformed file contents: wrong column count, bad IDX magic, bad version.
struct FormatError : Error {
  using Error::Error;
};

/// Bad data values: unparseable row, label out of range, count mismatch.
struct DataError : Error {
  using Error::Error;
};

/// NaN/Inf surfaced by an operation or a gradient.
struct NumericError : Error {
  using Error::Error;
};

/// Filesystem-level failure: missing file, short read, write error.
struct IoError : Error {
  using Error::Error;
};

}  // namespace glonet
