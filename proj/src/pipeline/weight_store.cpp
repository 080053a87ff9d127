#include "rtsac/pipeline/weight_store.hpp"

#include <string>

#include "rtsac/core/error.hpp"

namespace rtsac::pipeline {

WeightStore::WeightStore() = default;

void WeightStore::publish(nn::WeightSnapshot snapshot) {
  const std::uint64_t current = version_.load(std::memory_order_relaxed);
  if (snapshot.version != current + 1) {
    throw Error(ErrorKind::Usage, "weight store expects version " + std::to_string(current + 1) + ", got " +
                                      std::to_string(snapshot.version));
  }
  const std::uint64_t v = snapshot.version;
  slots_[back_] = std::move(snapshot);
  const std::uint8_t previous = middle_.exchange(static_cast<std::uint8_t>(back_ | kFresh), std::memory_order_acq_rel);
  back_ = previous & 3;
  version_.store(v, std::memory_order_release);
}

std::optional<nn::WeightSnapshot> WeightStore::fetch_latest() {
  if (middle_.load(std::memory_order_acquire) & kFresh) {
    const std::uint8_t previous = middle_.exchange(front_, std::memory_order_acq_rel);
    front_ = previous & 3;
  }
  const nn::WeightSnapshot& snap = slots_[front_];
  if (snap.version == 0) return std::nullopt;
  if (!snap.checksum_ok()) {
    throw Error(ErrorKind::Corruption, "weight snapshot version " + std::to_string(snap.version) +
                                           " failed its checksum");
  }
  return snap;
}

}  // namespace rtsac::pipeline
