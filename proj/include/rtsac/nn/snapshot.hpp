#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rtsac/nn/param_set.hpp"

namespace rtsac::nn {

// Serialized, checksummed copy of parameters. Wire format, all integers
// little-endian:
//
//   magic "RTSW" | u64 version | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 rank | u64 dims[rank]
//               | f64 payload (row-major, IEEE-754 little-endian)
//   u64 checksum over every preceding byte
struct WeightSnapshot {
  std::uint64_t version = 0;
  std::vector<std::uint8_t> bytes;

  std::uint64_t stored_checksum() const;
  bool checksum_ok() const;
};

std::uint64_t checksum64(std::span<const std::uint8_t> bytes) noexcept;

using NamedGroup = std::pair<std::string_view, const ParamSet*>;

// Tensors of every group are written with the group name prepended.
WeightSnapshot encode_snapshot(std::span<const NamedGroup> groups, std::uint64_t version);
WeightSnapshot encode_snapshot(const ParamSet& params, std::uint64_t version);

// Throws ErrorKind::Corruption on checksum mismatch or malformed bytes.
ParamSet restore(const WeightSnapshot& snapshot);

// Hands out strictly increasing versions starting at 1.
class Snapshotter {
 public:
  WeightSnapshot take(const ParamSet& params) { return encode_snapshot(params, ++last_); }
  WeightSnapshot take(std::span<const NamedGroup> groups) { return encode_snapshot(groups, ++last_); }
  std::uint64_t last_version() const noexcept { return last_; }

 private:
  std::uint64_t last_ = 0;
};

}  // namespace rtsac::nn
