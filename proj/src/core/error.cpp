#include "rtsac/core/error.hpp"

namespace rtsac {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::Scheduling: return "scheduling error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::EpisodeOver: return "episode over";
    case ErrorKind::Usage: return "usage error";
    case ErrorKind::Corruption: return "corruption";
    case ErrorKind::BufferWarming: return "buffer warming";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::Aggregation: return "aggregation error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Runtime: return "runtime error";
  }
  return "unknown error";
}

}  // namespace rtsac
