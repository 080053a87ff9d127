#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rtsac/core/types.hpp"

namespace rtsac::sac {

using Batch = std::vector<Transition>;

// FIFO ring of transitions. Sampling is uniform with replacement and is
// refused until `init_steps` transitions have been stored.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t init_steps, std::uint64_t seed);

  void push(Transition transition);
  // Throws ErrorKind::BufferWarming before warm-up completes (or when empty).
  Batch sample(std::size_t batch_size);

  bool warm() const noexcept { return size_ >= init_steps_ && size_ > 0; }
  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return storage_.size(); }
  std::size_t init_steps() const noexcept { return init_steps_; }
  std::uint64_t total_pushed() const noexcept { return pushed_; }

  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

 private:
  std::vector<Transition> storage_;
  std::size_t init_steps_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace rtsac::sac
