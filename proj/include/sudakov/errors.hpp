#pragma once

#include <stdexcept>
#include <string>

namespace sudakov {

/// Process exit codes used by the command line tool.
enum class ExitCode : int {
  ok = 0,
  config_error = 2,
  invariant_violation = 3,
  capacity_error = 4,
};

/// Base class for every error raised by the library. Carries the exit code
/// the CLI maps it to.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid parameters or malformed configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(what, ExitCode::config_error) {}
};

/// A formula was evaluated outside the range where it is asserted.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(what, ExitCode::config_error) {}
};

/// A value left the representable range even in log space.
class NumericRangeError : public Error {
 public:
  explicit NumericRangeError(const std::string& what)
      : Error(what, ExitCode::invariant_violation) {}
};

/// A checked invariant failed at run time.
class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(const std::string& what)
      : Error(what, ExitCode::invariant_violation) {}
};

/// Not enough room (dimension, distinct supports) to build the requested set.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what)
      : Error(what, ExitCode::capacity_error) {}
};

}  // namespace sudakov
