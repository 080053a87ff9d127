#pragma once

#include <stdexcept>
#include <string>

namespace rtsac {

enum class ErrorKind {
  InvalidInput,
  Scheduling,
  Configuration,
  EpisodeOver,
  Usage,
  Corruption,
  BufferWarming,
  NonFinite,
  Aggregation,
  Io,
  Runtime,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so the C API can map it
// onto a status code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rtsac
