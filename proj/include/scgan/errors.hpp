#pragma once

#include <stdexcept>
#include <string>

namespace scgan {

// Thrown when an operation's preconditions are violated (bad shapes, empty
// inputs, out-of-range indices). CLI maps these to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent or unsupported configuration (unknown keys, incompatible
// objective/constraint combinations).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure with a diagnostic (underflow across a whole sigma grid,
// non-convergent matrix routine).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset loading failure; message names the offending file.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training aborted (non-finite loss, accuracy floor unmet). CLI maps these
// to exit code 3.
class TrainingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace scgan
