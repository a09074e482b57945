#pragma once

#include <stdexcept>
#include <string>

namespace vqa4cir {

/// Broad failure classes. The CLI maps these onto exit codes.
enum class ErrorKind {
  invalid_argument,  ///< precondition violated by the caller
  config,            ///< bad user configuration (flags, parameter files)
  validation,        ///< input data breaks a structural invariant
  parse,             ///< malformed document
  io,                ///< filesystem failure
  oracle,            ///< answer backend failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class OracleFailure {
  missing_entry,
  backend_unavailable,
  backend_rejected,
  protocol_violation,
};

class OracleError : public Error {
 public:
  OracleError(OracleFailure failure, const std::string& message)
      : Error(ErrorKind::oracle, message), failure_(failure) {}

  OracleFailure failure() const noexcept { return failure_; }

  /// Only transport-level unavailability is safe to retry.
  bool retryable() const noexcept {
    return failure_ == OracleFailure::backend_unavailable;
  }

 private:
  OracleFailure failure_;
};

}  // namespace vqa4cir
