#pragma once

#include <stdexcept>
#include <string>

namespace sentscore {

// Base of every error the library throws. `kind()` is a stable identifier used
// in the CLI's machine-readable error stream.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define SENTSCORE_DEFINE_ERROR(Name, Kind)                        \
  class Name : public Error {                                     \
   public:                                                        \
    using Error::Error;                                           \
    const char* kind() const noexcept override { return Kind; }   \
  };

SENTSCORE_DEFINE_ERROR(ValidationError, "validation")
SENTSCORE_DEFINE_ERROR(SizeError, "size")
SENTSCORE_DEFINE_ERROR(ContractError, "contract")
SENTSCORE_DEFINE_ERROR(ConfigError, "config")
SENTSCORE_DEFINE_ERROR(ShapeError, "shape")
SENTSCORE_DEFINE_ERROR(DomainError, "domain")
SENTSCORE_DEFINE_ERROR(IoError, "io")
SENTSCORE_DEFINE_ERROR(ProtocolError, "protocol")
SENTSCORE_DEFINE_ERROR(TransportError, "transport")

#undef SENTSCORE_DEFINE_ERROR

// Malformed input file; carries the 1-based line number.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::size_t line)
      : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
  const char* kind() const noexcept override { return "parse"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sentscore
