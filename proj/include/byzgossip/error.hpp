#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace byzgossip {

enum class ErrorKind {
  InvalidArgument,
  ContractViolation,
  ProtocolViolation,
  InsufficientPopulation,
  UndefinedQuantity,
  Exhausted,
  Config,
  Parse,
  CheckFailure,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` distinguishes the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::ContractViolation: return "contract violation";
    case ErrorKind::ProtocolViolation: return "protocol violation";
    case ErrorKind::InsufficientPopulation: return "insufficient population";
    case ErrorKind::UndefinedQuantity: return "undefined quantity";
    case ErrorKind::Exhausted: return "retry budget exhausted";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::CheckFailure: return "check failure";
  }
  return "error";
}

}  // namespace byzgossip
