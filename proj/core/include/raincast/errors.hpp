#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace raincast {

// Base class for all raincast failures. Subclasses map onto the CLI's
// sysexits-style codes (see exit_code_for).
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data: bad magic, truncated payload, schema violations.
class FormatError : public Error {
public:
  FormatError(const std::string& msg, std::uint64_t byte_offset)
      : Error(msg + " (at byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}
  explicit FormatError(const std::string& msg) : Error(msg), byte_offset_(0) {}
  std::uint64_t byte_offset() const { return byte_offset_; }

private:
  std::uint64_t byte_offset_;
};

// Violated preconditions and inconsistent configuration.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Filesystem-level failures: missing files, short writes.
class IoError : public Error {
public:
  using Error::Error;
};

// Runtime numeric failures: NaN losses, degenerate regressions.
class NumericError : public Error {
public:
  using Error::Error;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 64,      // unknown subcommand / bad flags
  kExitValidation = 65, // bad input data or configuration
  kExitNumeric = 70,    // numeric failure
  kExitIo = 74,         // I/O failure
};

inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitValidation;
}

}  // namespace raincast
