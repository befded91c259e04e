#pragma once

#include <stdexcept>
#include <string>

namespace spinsc {

/// Invalid user input: bad spin value, malformed term list, out-of-range state
/// index, mismatched grids. The CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not deliver its post-condition (eigensolver
/// non-convergence, orbit without return, fixed-point start). Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested energy has no usable periodic orbit: outside the classical
/// range, inside a separatrix guard band, or on a critical value.
class UnreachableEnergy : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Orbit integration was asked to start on (or reached) a fixed point of the flow.
class FixedPointError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace spinsc
