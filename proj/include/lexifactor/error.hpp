#pragma once

#include <stdexcept>
#include <string>

namespace lexifactor {

// Bad input: malformed files, violated preconditions, out-of-range
// configuration. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failures while running a well-formed request (backend, I/O, numerics).
// The CLI maps these to exit code 1.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lexifactor
