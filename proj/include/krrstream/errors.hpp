#pragma once

#include <stdexcept>
#include <string>

namespace krr {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pivot, Schur denominator, or inner system fell below the working
/// tolerance; the requested inverse update is not numerically meaningful.
class SingularPivot : public Error {
 public:
  using Error::Error;
};

/// An index or sample id does not address a stored row or sample, or an
/// added id collides with one already present.
class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

/// Operand shapes are inconsistent with each other or with the model.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The requested operation is undefined for the configured kernel family.
class UnsupportedKernel : public Error {
 public:
  using Error::Error;
};

/// An edit sequence would leave the model with no samples.
class EmptyModel : public Error {
 public:
  using Error::Error;
};

/// Malformed input data; the message carries the offending line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A sparse record addresses a feature index beyond the declared dimension.
class DimensionOverride : public Error {
 public:
  using Error::Error;
};

/// A stream plan asks for more samples than the dataset can supply.
class PlanExhausted : public Error {
 public:
  using Error::Error;
};

}  // namespace krr
