#pragma once

#include <stdexcept>
#include <string>

namespace mfinfo {

enum class ErrorCode {
  invalid_argument,
  config,         // invalid configuration (shape, widths, ranges)
  evaluation,     // non-finite integrand or signal
  degenerate,     // quantity undefined at the trivial fixed point
  convergence,
  conditioning,   // matrix not positive definite after regularization
  domain,         // analytic bound outside its admissible range
  io,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

class EvaluationError : public Error {
 public:
  explicit EvaluationError(const std::string& what)
      : Error(ErrorCode::evaluation, what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ErrorCode::degenerate, what) {}
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double smallest_eigenvalue)
      : Error(ErrorCode::conditioning, what), smallest_(smallest_eigenvalue) {}

  double smallest_eigenvalue() const noexcept { return smallest_; }

 private:
  double smallest_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCode::domain, what) {}
};

}  // namespace mfinfo
