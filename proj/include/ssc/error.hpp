#pragma once

#include <stdexcept>
#include <string>

namespace ssc {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid caller input: bad arguments, malformed config, schema mismatch.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Failure reading or writing an on-disk artifact.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssc
