#pragma once

#include <stdexcept>
#include <string>

namespace rklab {

/// Invalid or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Valid input on which a computation's precondition fails (a path that
/// never reaches -x, a check that needs a Gaussian part, ...).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A valid configuration that the requested computation does not support
/// (for example a height process without a Gaussian part).
class UnsupportedConfiguration : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

}  // namespace rklab
