#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace fracsteklov {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user-supplied parameter is outside its admissible range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A mesh (generated, refined or imported) violates a structural invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number of the failure.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// Raised when a matrix that must be symmetric positive definite is not.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

/// Jacobi preconditioner met a zero or negative diagonal entry.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative method exhausted its iteration budget.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double last_residual)
      : Error(what + " (last relative residual " + format(last_residual) + ")"), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }

  double last_residual_;
};

/// Invalid run configuration (config file, CLI flags, or solver setup).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracsteklov
