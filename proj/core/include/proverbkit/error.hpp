#pragma once

#include <stdexcept>
#include <string>

namespace proverbkit {

/// Process exit codes used by the command-line front-end.
enum class ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kModel = 3,
  kData = 4,
};

/// Base class of all toolkit errors. Each subclass maps to one exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual ExitCode exit_code() const noexcept = 0;
};

/// Bad configuration, bad arguments, or a violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::kValidation; }
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::kData; }
};

/// Transport failures and non-success responses from an external model.
class ModelError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::kModel; }
};

/// The model answered, but not in the constrained form the caller asked for.
class ProtocolError : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace proverbkit
