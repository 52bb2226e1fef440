#pragma once

#include <stdexcept>
#include <string>

namespace cnls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A field, state or matrix does not match the grid / problem it is used with.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Structural violation of the problem data (asymmetric coupling, bad decomposition, ...).
class ProblemError : public Error {
 public:
  using Error::Error;
};

/// The Nehari projection could not produce a point with every group active.
class ProjectionError : public Error {
 public:
  using Error::Error;
};

/// The interaction matrix is singular at the given state, so the state is not in E_B.
class NotInEError : public Error {
 public:
  using Error::Error;
};

/// Every restart of a multi-start minimization failed.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace cnls
