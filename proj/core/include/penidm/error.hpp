#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace penidm {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed data, inconsistent configuration, invalid arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a hazard function (t <= 0, beyond spline knots).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-finite objective, failed line search, divergent iterates.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what,
                          std::optional<long> subject = std::nullopt);

  /// Index of the subject whose contribution went non-finite, when known.
  std::optional<long> subject() const { return subject_; }

 private:
  std::optional<long> subject_;
};

}  // namespace penidm
