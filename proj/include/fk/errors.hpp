#pragma once

#include <stdexcept>
#include <string>

namespace fk {

enum class ErrorKind {
  InvalidInput,
  NumericFailure,
  DomainError,
  InvalidModel,
  InvalidConfig,
};

const char* to_string(ErrorKind kind);

/// Error raised by every module of the library. Carries the module that
/// failed and a free-form description of the offending sample.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(std::move(module)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

[[noreturn]] inline void fail(ErrorKind kind, const char* module, const std::string& what) {
  throw Error(kind, module, what);
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::DomainError: return "domain-error";
    case ErrorKind::InvalidModel: return "invalid-model";
    case ErrorKind::InvalidConfig: return "invalid-config";
  }
  return "unknown";
}

}  // namespace fk
