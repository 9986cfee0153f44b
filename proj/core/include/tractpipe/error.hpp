#pragma once

#include <stdexcept>
#include <string>

namespace tractpipe {

// Base of every exception thrown by the library. The CLI maps any of these to
// a nonzero exit code with the message printed on stderr.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension / channel / class-count disagreement between inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed headers, truncated payloads, non-finite or non-binary payload data.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures (missing files, unwritable directories).
class IoError : public Error {
 public:
  using Error::Error;
};

// Out-of-range configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Divergence (NaN/Inf loss) during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tractpipe
