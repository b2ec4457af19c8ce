#pragma once

#include <stdexcept>
#include <string>

namespace blab {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong dimensions, invalid parameters, bad layer lists.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Data ingestion failures.
class DataError : public Error {
 public:
  using Error::Error;
};

class BadMagic : public DataError {
 public:
  using DataError::DataError;
};

class TruncatedFile : public DataError {
 public:
  using DataError::DataError;
};

class CountMismatch : public DataError {
 public:
  using DataError::DataError;
};

/// Numeric failures during training or projection.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Root seeking hit a vanishing gradient away from the boundary.
class StallError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Too many samples failed to project; the run is aborted.
class ProjectionFailure : public NumericError {
 public:
  using NumericError::NumericError;
};

/// The network misclassifies a sample that must lie on its correct side.
class MisclassifiedSample : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace blab
