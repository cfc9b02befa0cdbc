#pragma once

#include <stdexcept>
#include <string>

namespace vdlab {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem / OS level failures: missing file, short read, failed write.
struct IoError : Error {
  using Error::Error;
};

// Structurally invalid input data: bad RIFF header, bad annotation line.
struct ParseError : Error {
  using Error::Error;
};

// Recognized format but an encoding or variant we do not handle.
struct UnsupportedError : Error {
  using Error::Error;
};

// Precondition violation on function arguments or configuration.
struct ValueError : Error {
  using Error::Error;
};

}  // namespace vdlab
