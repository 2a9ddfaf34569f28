#pragma once

#include <stdexcept>
#include <string>

namespace mipvu {

/// Failure categories. The CLI maps each one to a distinct exit status.
enum class ErrorKind {
  usage,       // bad flags or arguments
  io,          // missing or unreadable/unwritable file
  schema,      // input does not follow its file format
  validation,  // well-formed input that violates a domain contract
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::io: return "io";
    case ErrorKind::schema: return "schema";
    case ErrorKind::validation: return "validation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error schema_error(const std::string& what) {
  return Error(ErrorKind::schema, what);
}

inline Error validation_error(const std::string& what) {
  return Error(ErrorKind::validation, what);
}

inline Error io_error(const std::string& what) {
  return Error(ErrorKind::io, what);
}

}  // namespace mipvu
