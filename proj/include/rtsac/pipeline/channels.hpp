#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "rtsac/core/clock.hpp"
#include "rtsac/core/types.hpp"
#include "rtsac/sac/replay_buffer.hpp"

namespace rtsac::pipeline {

// Bounded FIFO between the interaction worker and the sampler. push never
// blocks: at capacity the oldest element is evicted and counted as a drop.
class TransitionChannel {
 public:
  TransitionChannel(std::size_t capacity, Clock& clock);

  void push(Transition transition);
  // Everything currently queued, oldest first. Never blocks.
  std::vector<Transition> drain();
  // Blocks until something is queued or the channel is closed; returns an
  // empty vector only when closed and empty.
  std::vector<Transition> drain_wait();
  void close();

  bool closed() const;
  std::size_t size() const;
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t drops() const;
  std::size_t max_occupancy() const;

 private:
  Clock& clock_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  Gate gate_;
  std::deque<Transition> items_;
  std::uint64_t drops_ = 0;
  std::size_t max_occupancy_ = 0;
  bool closed_ = false;
};

// Bounded FIFO of minibatches; the producer blocks when full and the consumer
// blocks when empty.
class BatchChannel {
 public:
  BatchChannel(std::size_t capacity, Clock& clock);

  // False once the channel is closed.
  bool push(sac::Batch batch);
  // std::nullopt once the channel is closed.
  std::optional<sac::Batch> pop();
  void close();

  bool closed() const;
  std::size_t size() const;
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  Clock& clock_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  Gate not_empty_;
  Gate not_full_;
  std::deque<sac::Batch> items_;
  bool closed_ = false;
};

}  // namespace rtsac::pipeline
