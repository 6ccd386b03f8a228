#pragma once

#include <stdexcept>
#include <string>

namespace peres {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called in a state it does not accept (e.g. double
/// background subtraction, wrong noise-draw arity).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// An input lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Input data is degenerate or incomplete (zero denominators, missing
/// shutter configurations, too few samples).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An imperfection or run configuration is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical analysis could not produce an answer (no root, ambiguous
/// reconstruction, fit did not converge).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace peres
