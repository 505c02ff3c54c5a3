#pragma once

#include <stdexcept>
#include <string>

namespace tfqkd {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A preparation matrix cannot be inverted (condition number above bound).
struct SingularMatrixError : Error {
  using Error::Error;
};

// A set of preparation labels yields linearly dependent columns.
struct DegenerateSetError : Error {
  using Error::Error;
};

// Interferometer parameters are unphysical at the requested operating point.
struct InvalidModelError : Error {
  using Error::Error;
};

// Both detectors registered zero counts for a preparation pair.
struct NoCountsError : Error {
  using Error::Error;
};

// The sinusoid regressor system is singular (insufficient phase coverage).
struct FitDegenerateError : Error {
  using Error::Error;
};

// Bob's label reveals do not cover a required expectation column.
struct MissingLabelError : Error {
  using Error::Error;
};

// A message arrived out of causal order (e.g. reveal before announce).
struct ProtocolViolationError : Error {
  using Error::Error;
};

// Experiment configuration is malformed or violates an invariant.
struct ConfigError : Error {
  using Error::Error;
};

// A data file does not match its documented schema.
struct SchemaError : Error {
  using Error::Error;
};

}  // namespace tfqkd
