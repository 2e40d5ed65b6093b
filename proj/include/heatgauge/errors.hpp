#pragma once

#include <stdexcept>
#include <string>

namespace heatgauge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, negative weights, p < 1, ...
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to reach its target (root finder, quadrature,
/// NaN in a path). Carries the achieved residual where one exists.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The requested oracle (exact density, quadrature reduction) does not exist
/// for this geometry or function.
class Unsupported : public Error {
 public:
  using Error::Error;
};

/// A catalog function failed its harmonic/subharmonic certification.
class ClassificationFailure : public Error {
 public:
  ClassificationFailure(const std::string& function_id, double residual)
      : Error("classification failure for '" + function_id +
              "' (residual " + std::to_string(residual) + ")"),
        function_id_(function_id),
        residual_(residual) {}
  const std::string& function_id() const noexcept { return function_id_; }
  double residual() const noexcept { return residual_; }

 private:
  std::string function_id_;
  double residual_;
};

}  // namespace heatgauge
