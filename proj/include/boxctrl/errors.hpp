#pragma once

#include <stdexcept>
#include <string>

namespace boxctrl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The wall motion makes the box length ell0 + lambda*f(t) non-positive.
class WallCollision : public Error {
 public:
  using Error::Error;
};

/// Every multistart of the control search stalled below fidelity 0.5.
class NoImprovement : public Error {
 public:
  using Error::Error;
};

/// An escalation schedule ran out before the error budget was met.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Requested wall motion is outside what the dilation-driven method covers
/// (pure translation).
class UnsupportedMotion : public Error {
 public:
  using Error::Error;
};

class InfeasibleRamp : public Error {
 public:
  using Error::Error;
};

/// Eigenvector overlap matching between neighbouring grid points was
/// ambiguous; the eta grid is too coarse.
class DegenerateMatching : public Error {
 public:
  using Error::Error;
};

}  // namespace boxctrl
