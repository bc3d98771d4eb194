#pragma once

#include <stdexcept>
#include <string>

namespace rslam {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A vector that must have non-zero length (direction, wall, range) does not.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// The AOD and AOA unit vectors of a path are (nearly) opposite, so the
// BS-side distance fraction cannot be recovered.
class NearParallel : public Error {
 public:
  using Error::Error;
};

// The weighted normal matrix of the closed-form estimate is ill-conditioned.
class SingularGeometry : public Error {
 public:
  using Error::Error;
};

class NoFeasibleSolution : public Error {
 public:
  using Error::Error;
};

// Fewer paths than the minimal set; no cell can be feasible.
class TooFewPaths : public NoFeasibleSolution {
 public:
  using NoFeasibleSolution::NoFeasibleSolution;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class MissingTruth : public Error {
 public:
  using Error::Error;
};

class InvalidPosition : public Error {
 public:
  using Error::Error;
};

// Malformed input files or configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace rslam
