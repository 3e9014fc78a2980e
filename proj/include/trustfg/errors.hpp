#pragma once

#include <stdexcept>
#include <string>

namespace trustfg {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A factor or assignment referenced a key with no backing variable.
struct UnresolvedVariableError : Error {
  using Error::Error;
};

/// Covariance is not symmetric positive-definite (Cholesky failed).
struct NoiseModelError : Error {
  using Error::Error;
};

/// A residual or jacobian came back non-finite during linearization.
struct LinearizationError : Error {
  using Error::Error;
};

/// Normal equations are singular; message names the unconstrained keys.
struct RankDeficiencyError : Error {
  using Error::Error;
};

/// Levenberg-Marquardt damping overflowed without an accepted step.
struct SolverStallError : Error {
  using Error::Error;
};

/// Trajectories passed to a pairwise operation do not share N or dt.
struct AlignmentError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

/// SDF query left the grid by more than the allowed clamp margin.
struct BoundsError : Error {
  using Error::Error;
};

/// Occupancy grid with no free cells cannot produce a usable field.
struct DegenerateMapError : Error {
  using Error::Error;
};

/// Scenario file problem; message carries the offending field path.
struct ConfigError : Error {
  using Error::Error;
};

/// Reading or writing an output artifact failed.
struct IoError : Error {
  using Error::Error;
};

}  // namespace trustfg
