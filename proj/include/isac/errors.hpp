#pragma once

#include <stdexcept>
#include <string>

namespace isac {

/// Base class for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Target coincides with a node, or a one-way range is zero.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class BadSchedule : public Error {
 public:
  using Error::Error;
};

class EmptySpectrum : public Error {
 public:
  using Error::Error;
};

/// Centered moments were required but the schedule carries nonzero means.
class NotCentered : public Error {
 public:
  using Error::Error;
};

/// A geometry-weighted information matrix is rank deficient (condition > 1e12).
class SingularGeometry : public Error {
 public:
  using Error::Error;
};

/// Finite-difference derivatives are not in their asymptotic regime.
class StepTooLarge : public Error {
 public:
  using Error::Error;
};

class EmptyBox : public Error {
 public:
  using Error::Error;
};

/// Stage A peak landed on the search-window boundary (an outage).
class WindowMiss : public Error {
 public:
  using Error::Error;
};

class InsufficientPaths : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Configuration file or command-line problem; the message names the key or path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace isac
