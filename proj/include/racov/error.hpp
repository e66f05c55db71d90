#pragma once

#include <stdexcept>
#include <string>

namespace racov {

enum class ErrorKind {
  io,                 // file missing, unreadable, unwritable
  parse,              // malformed input content
  config,             // invalid configuration
  data,               // dataset/model invariant violated
  network,            // endpoint unreachable, retries exhausted, offline miss
  insufficient_data,  // statistic requested on an empty group
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::network: return "network";
    case ErrorKind::insufficient_data: return "insufficient-data";
  }
  return "unknown";
}

// Process exit code used by the CLI for each error category.
inline int error_exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::io: return 3;
    case ErrorKind::parse: return 4;
    case ErrorKind::data: return 5;
    case ErrorKind::network: return 6;
    case ErrorKind::insufficient_data: return 7;
  }
  return 1;
}

}  // namespace racov
