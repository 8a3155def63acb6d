#pragma once

#include <stdexcept>
#include <string>

namespace iqlut {

/// Failure categories. Each maps onto a distinct process exit code in the CLI.
enum class ErrorKind {
  kConfig,     // invalid arguments, specs or configuration
  kData,       // unreadable or unusable input data
  kIntegrity,  // corrupt or inconsistent model / checkpoint files
  kNumerical,  // divergence, non-finite values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ErrorKind::kIntegrity, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

/// 2 config, 3 data, 4 integrity, 5 numerical divergence.
int exit_code(ErrorKind kind) noexcept;

}  // namespace iqlut
