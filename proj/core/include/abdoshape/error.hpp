#pragma once

#include <stdexcept>
#include <string>

namespace abdoshape {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (bad argument, bad shape, bad config).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data is malformed or unusable (bad file, single-class labels, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: non-convergence, non-finite values, degenerate elements.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Marching cubes found no isosurface.
class EmptySurfaceError : public DataError {
 public:
  EmptySurfaceError() : DataError("empty surface: occupancy has no isosurface") {}
};

/// An invariant that should hold by construction was violated.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace abdoshape
