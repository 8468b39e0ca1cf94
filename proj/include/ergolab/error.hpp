#pragma once

#include <stdexcept>
#include <string>

namespace ergolab {

// Base for every error the library raises. The CLI maps these to exit codes:
// ConfigError, UsageError, ResourceError, OutOfRangeError and UndefinedError
// all exit with status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown or malformed descriptors (group specs, system kinds, profiles).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Arguments violate an operation's precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A size cap (ball, support, sequence) would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// An element could not be located within the configured search cap.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

// A normalized average with zero normalizer.
class UndefinedError : public Error {
 public:
  using Error::Error;
};

}  // namespace ergolab
