#pragma once

#include <stdexcept>
#include <string>

namespace designforge {

// Bad arguments: out-of-range coordinates, unknown tags, malformed documents.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed run configuration: unknown key, missing key, bad value. Maps to exit code 1.
class UsageError : public InputError {
 public:
  using InputError::InputError;
};

// A computation that cannot proceed (singular frame, step-size collapse).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace designforge
