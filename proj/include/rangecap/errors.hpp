#pragma once

#include <stdexcept>
#include <string>

namespace rangecap {

// Error categories map one-to-one onto the CLI exit codes.

/// Bad input: out-of-range dimension, malformed file, inconsistent arguments.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to reach its target accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace rangecap
