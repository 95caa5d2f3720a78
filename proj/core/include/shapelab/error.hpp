#pragma once

#include <stdexcept>
#include <string>

namespace shapelab {

// Base class for all shapelab failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Two domains on different grids were combined.
class SpecMismatchError : public Error {
 public:
  using Error::Error;
};

// A shape does not fit in the grid box (or leaves it after an operation).
class BoundsError : public Error {
 public:
  using Error::Error;
};

// An operation's stated precondition does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// An iterative solver failed to reach its tolerance; carries the last residual.
class SolverError : public Error {
 public:
  SolverError(const std::string& msg, double residual)
      : Error(msg + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace shapelab
