#pragma once

#include <stdexcept>
#include <string>

namespace ucmf {

// Base of all recoverable engine errors. The CLI maps these to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SelfLoopError : Error {
  using Error::Error;
};
struct RangeError : Error {
  using Error::Error;
};
struct IsolatedNodeError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct MissingLabelError : Error {
  using Error::Error;
};
struct DegenerateNormError : Error {
  using Error::Error;
};
struct DivergenceError : Error {
  using Error::Error;
};
struct EmptySplitError : Error {
  using Error::Error;
};
struct NonConvergenceError : Error {
  using Error::Error;
};
struct StallError : Error {
  using Error::Error;
};
// Malformed input files or wire frames.
struct FormatError : Error {
  using Error::Error;
};

}  // namespace ucmf
