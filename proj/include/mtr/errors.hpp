#pragma once

#include <stdexcept>
#include <string>

namespace mtr {

/// Invalid user input: grid parameters, specs, config keys, tolerances.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two fields or operators defined on different grids were combined.
class GridMismatch : public std::runtime_error {
 public:
  GridMismatch() : std::runtime_error("grid mismatch") {}
  using std::runtime_error::runtime_error;
};

/// An iterative method failed to meet its tolerance, or a computed quantity
/// violates a structural requirement (sign change, positivity, realness).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural hypothesis on the model failed (e.g. b - 2<psi0,Y G0 Y psi0> <= 0).
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mtr
