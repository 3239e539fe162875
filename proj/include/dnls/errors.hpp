#pragma once

#include <stdexcept>
#include <string>

namespace dnls {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parameter outside its admissible domain (e.g. c^2 >= 4*omega, p < 1).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Two fields on different grids were combined.
class GridMismatchError : public Error {
public:
  using Error::Error;
};

/// A decay-assuming operation met non-vanishing samples at the box edges.
class BoundaryDecayError : public Error {
public:
  using Error::Error;
};

/// Invalid multi-soliton configuration, with the violated condition attached.
class MultiSolitonError : public Error {
public:
  enum class Kind {
    bad_parameters,     // omega <= 0 or lump endpoint c^2 >= 4*omega
    unordered_speeds,   // c_j not strictly increasing
    unordered_positions,
    separation_too_small,
    sigma_condition,    // sigma_j <= 0 or sigma_j outside (c_{j-1}, c_j)
  };

  MultiSolitonError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

/// Time integration failure (NaN/Inf detected); carries the failure time.
class EvolveError : public Error {
public:
  EvolveError(double t, const std::string& what) : Error(what), t_(t) {}
  double time() const { return t_; }

private:
  double t_;
};

/// Modulation solve failures that are not plain non-convergence.
class ModulationError : public Error {
public:
  enum class Kind { singular_jacobian, step_failure, inadmissible_state };

  ModulationError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

/// Experiment configuration problems; mapped to exit code 2 by the CLI.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace dnls
