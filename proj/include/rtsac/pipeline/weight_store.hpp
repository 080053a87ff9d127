#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>

#include "rtsac/nn/snapshot.hpp"

namespace rtsac::pipeline {

// Latest-value holder between one writer (the updater) and one reader (the
// interaction worker), implemented as a triple buffer. Both sides are
// wait-free; the writer never waits for the reader.
class WeightStore {
 public:
  WeightStore();
  WeightStore(const WeightStore&) = delete;
  WeightStore& operator=(const WeightStore&) = delete;

  // Requires snapshot.version == version() + 1 (ErrorKind::Usage otherwise).
  void publish(nn::WeightSnapshot snapshot);

  // Newest complete snapshot, or std::nullopt before the first publish.
  // Throws ErrorKind::Corruption when the checksum does not verify.
  std::optional<nn::WeightSnapshot> fetch_latest();

  // Highest published version (0 before any publish). Safe from any thread.
  std::uint64_t version() const noexcept { return version_.load(std::memory_order_acquire); }

 private:
  static constexpr std::uint8_t kFresh = 4;

  std::array<nn::WeightSnapshot, 3> slots_;
  std::atomic<std::uint8_t> middle_{1};
  std::uint8_t back_ = 0;   // writer-owned
  std::uint8_t front_ = 2;  // reader-owned
  std::atomic<std::uint64_t> version_{0};
};

}  // namespace rtsac::pipeline
