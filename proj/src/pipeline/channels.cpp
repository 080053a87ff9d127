#include "rtsac/pipeline/channels.hpp"

#include <algorithm>

#include "rtsac/core/error.hpp"

namespace rtsac::pipeline {

TransitionChannel::TransitionChannel(std::size_t capacity, Clock& clock) : clock_(clock), capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorKind::Configuration, "transition channel capacity must be positive");
}

void TransitionChannel::push(Transition transition) {
  std::lock_guard lock(mutex_);
  if (closed_) return;
  if (items_.size() == capacity_) {
    items_.pop_front();
    ++drops_;
  }
  items_.push_back(std::move(transition));
  max_occupancy_ = std::max(max_occupancy_, items_.size());
  clock_.notify_all(gate_);
}

std::vector<Transition> TransitionChannel::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Transition> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
  items_.clear();
  return out;
}

std::vector<Transition> TransitionChannel::drain_wait() {
  std::unique_lock lock(mutex_);
  while (items_.empty() && !closed_) clock_.wait(gate_, lock);
  std::vector<Transition> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
  items_.clear();
  return out;
}

void TransitionChannel::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  clock_.notify_all(gate_);
}

bool TransitionChannel::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t TransitionChannel::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

std::uint64_t TransitionChannel::drops() const {
  std::lock_guard lock(mutex_);
  return drops_;
}

std::size_t TransitionChannel::max_occupancy() const {
  std::lock_guard lock(mutex_);
  return max_occupancy_;
}

BatchChannel::BatchChannel(std::size_t capacity, Clock& clock) : clock_(clock), capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorKind::Configuration, "batch channel capacity must be positive");
}

bool BatchChannel::push(sac::Batch batch) {
  std::unique_lock lock(mutex_);
  while (items_.size() >= capacity_ && !closed_) clock_.wait(not_full_, lock);
  if (closed_) return false;
  items_.push_back(std::move(batch));
  clock_.notify_all(not_empty_);
  return true;
}

std::optional<sac::Batch> BatchChannel::pop() {
  std::unique_lock lock(mutex_);
  while (items_.empty() && !closed_) clock_.wait(not_empty_, lock);
  if (closed_) return std::nullopt;
  sac::Batch batch = std::move(items_.front());
  items_.pop_front();
  clock_.notify_all(not_full_);
  return batch;
}

void BatchChannel::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  clock_.notify_all(not_empty_);
  clock_.notify_all(not_full_);
}

bool BatchChannel::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t BatchChannel::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

}  // namespace rtsac::pipeline
