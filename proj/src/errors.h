#pragma once

#include <stdexcept>
#include <string>

namespace pobp {

// Error categories. They map one-to-one onto the C API status codes and
// the CLI exit codes: config=1, io=2, numeric/protocol=3.
enum class ErrorClass {
  config = 1,
  io = 2,
  numeric = 3,
};

class Error : public std::runtime_error {
public:
  Error(ErrorClass cls, const std::string& msg)
      : std::runtime_error(msg), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

private:
  ErrorClass class_;
};

// Bad settings, bad flag combinations, dimension mismatches.
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error(ErrorClass::config, m) {}
};

// Unreadable or unwritable files.
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorClass::io, m) {}
};

// Malformed file contents (bad header, bad body line, wrong vocab length).
struct ParseError : Error {
  explicit ParseError(const std::string& m) : Error(ErrorClass::io, m) {}
};

// Domain violations in numeric operations (empty test set, zero tokens, ...).
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error(ErrorClass::numeric, m) {}
};

// A worker replica diverged from the shared base outside the agreed scope,
// or a payload failed validation.
struct ProtocolError : Error {
  explicit ProtocolError(const std::string& m) : Error(ErrorClass::numeric, m) {}
};

// Sufficient statistics went negative beyond tolerance; indicates the old
// message contribution being removed was never added.
struct AccountingError : Error {
  explicit AccountingError(const std::string& m) : Error(ErrorClass::numeric, m) {}
};

}  // namespace pobp
