#pragma once

#include <stdexcept>
#include <string>

namespace gpm {

enum class ErrorKind { Usage, Data, Numerical };

/// Base of every error the library throws. `code` is a short upper-case
/// token (e.g. MISSING_COLUMN) suitable for machine parsing.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

class UsageError : public Error {
 public:
  UsageError(std::string code, const std::string& message)
      : Error(ErrorKind::Usage, std::move(code), message) {}
};

class DataError : public Error {
 public:
  DataError(std::string code, const std::string& message)
      : Error(ErrorKind::Data, std::move(code), message) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string code, const std::string& message)
      : Error(ErrorKind::Numerical, std::move(code), message) {}
};

/// Process exit status for each error kind: 2 usage, 3 data, 4 numerical.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
      return 2;
    case ErrorKind::Data:
      return 3;
    case ErrorKind::Numerical:
      return 4;
  }
  return 1;
}

}  // namespace gpm
