#pragma once

#include <stdexcept>
#include <string>

namespace dkd {

enum class ErrorKind { input, domain, config, parse, run, usage };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed or inconsistent data handed to an operation.
struct InputError : Error {
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

// Argument outside the mathematical domain (non-positive temperature, zero variance).
struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

// Invalid user configuration (grid, alpha, K, task spec).
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

// File contents that do not follow the CSV/JSON formats.
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorKind::parse, what) {}
};

// Failure during a training run (divergence).
struct RunError : Error {
  explicit RunError(const std::string& what) : Error(ErrorKind::run, what) {}
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

}  // namespace dkd
