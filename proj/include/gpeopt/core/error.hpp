#pragma once

#include <stdexcept>
#include <string>

namespace gpeopt {

/// Invalid or inconsistent user configuration (exit code 1 in the CLI).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed: non-finite values, stagnation, non-convergence
/// (exit code 2 in the CLI).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands defined on different grids or time samplings.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace gpeopt
