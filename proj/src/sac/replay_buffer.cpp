#include "rtsac/sac/replay_buffer.hpp"

#include <string>

#include "rtsac/core/error.hpp"

namespace rtsac::sac {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t init_steps, std::uint64_t seed)
    : init_steps_(init_steps), rng_(seed) {
  if (capacity == 0) throw Error(ErrorKind::Configuration, "replay buffer capacity must be positive");
  if (init_steps > capacity) throw Error(ErrorKind::Configuration, "replay buffer init_steps exceeds capacity");
  storage_.resize(capacity);
}

void ReplayBuffer::push(Transition transition) {
  storage_[head_] = std::move(transition);
  head_ = (head_ + 1) % storage_.size();
  if (size_ < storage_.size()) ++size_;
  ++pushed_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw Error(ErrorKind::Usage, "replay buffer index out of range");
  const std::size_t oldest = (head_ + storage_.size() - size_) % storage_.size();
  return storage_[(oldest + i) % storage_.size()];
}

Batch ReplayBuffer::sample(std::size_t batch_size) {
  if (!warm()) {
    throw Error(ErrorKind::BufferWarming, "replay buffer holds " + std::to_string(size_) + " of " +
                                              std::to_string(init_steps_) + " warm-up transitions");
  }
  if (batch_size == 0) throw Error(ErrorKind::Usage, "batch size must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  Batch batch;
  batch.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size; ++k) batch.push_back(at(pick(rng_)));
  return batch;
}

}  // namespace rtsac::sac
