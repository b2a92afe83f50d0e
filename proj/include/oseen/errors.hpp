#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oseen {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or unsupported option (degree, mesh size, config key).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent study configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A point fell outside the computational domain.
class DomainViolation : public Error {
 public:
  using Error::Error;
};

/// A modelling hypothesis (boundary values of w, time-step restriction) does not hold.
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

/// Clipping / area bookkeeping is inconsistent.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver hit max_iter. Carries the residual history.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::vector<double> history)
      : Error(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

/// Non-finite values encountered in a solve or evaluation.
class Divergence : public Error {
 public:
  using Error::Error;
};

}  // namespace oseen
