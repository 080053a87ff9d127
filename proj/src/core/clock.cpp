#include "rtsac/core/clock.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include "rtsac/core/error.hpp"

namespace rtsac {

namespace {

// Identifies the virtual clock (if any) that owns the current thread.
thread_local const VirtualClock* tl_owner = nullptr;
thread_local WorkerId tl_worker = -1;

void join_and_rethrow(std::vector<std::thread>& threads, std::vector<std::exception_ptr>& errors) {
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void Clock::sleep_until(Millis t) {
  const Millis current = now();
  if (!try_sleep_until(t)) {
    throw Error(ErrorKind::Scheduling, "deadline already missed: t=" + std::to_string(t) +
                                           " ms, now=" + std::to_string(current) + " ms");
  }
}

void Clock::sleep_for(Millis duration) {
  if (duration < 0) throw Error(ErrorKind::Scheduling, "negative sleep duration");
  try_sleep_until(now() + duration);
}

// ---------------------------------------------------------------------------

RealClock::RealClock() : origin_(std::chrono::steady_clock::now()) {}

Millis RealClock::now() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               origin_)
      .count();
}

double RealClock::now_precise() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - origin_)
      .count();
}

bool RealClock::try_sleep_until(Millis t) {
  if (t < now()) return false;
  std::unique_lock lock(mutex_);
  stop_cv_.wait_until(lock, origin_ + std::chrono::milliseconds(t), [&] { return stop_; });
  return true;
}

void RealClock::run(std::vector<WorkerFn> workers) {
  {
    std::lock_guard lock(mutex_);
    stop_ = false;
  }
  std::vector<std::exception_ptr> errors(workers.size());
  std::vector<std::thread> threads;
  threads.reserve(workers.size());
  for (std::size_t i = 0; i < workers.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        workers[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  join_and_rethrow(threads, errors);
}

void RealClock::wait(Gate& gate, std::unique_lock<std::mutex>& lock) { gate.cv.wait(lock); }

void RealClock::notify_all(Gate& gate) { gate.cv.notify_all(); }

void RealClock::request_stop() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  stop_cv_.notify_all();
}

bool RealClock::stop_requested() const {
  std::lock_guard lock(mutex_);
  return stop_;
}

// ---------------------------------------------------------------------------

Millis VirtualClock::now() const {
  std::lock_guard lock(mutex_);
  return now_;
}

bool VirtualClock::is_own_worker() const noexcept { return tl_owner == this; }

bool VirtualClock::try_sleep_until(Millis t) {
  std::unique_lock lock(mutex_);
  if (t < now_) return false;
  if (!is_own_worker()) {
    if (alive_ > 0) {
      throw Error(ErrorKind::Usage, "virtual clock advanced from outside its workers while running");
    }
    now_ = t;
    return true;
  }
  if (aborted_) throw Error(ErrorKind::Scheduling, "virtual clock aborted");
  if (stop_) return true;
  const WorkerId self = tl_worker;
  queue_.emplace(t, self);
  sleeping_.emplace_back(self, t);
  yield_locked(lock, self);
  std::erase_if(sleeping_, [self](const auto& s) { return s.first == self; });
  return true;
}

void VirtualClock::wait(Gate& gate, std::unique_lock<std::mutex>& user_lock) {
  if (!is_own_worker()) throw Error(ErrorKind::Usage, "virtual wait outside a worker");
  const WorkerId self = tl_worker;
  gate.waiters.push_back(self);
  user_lock.unlock();
  {
    std::unique_lock lock(mutex_);
    if (aborted_) {
      lock.unlock();
      user_lock.lock();
      throw Error(ErrorKind::Scheduling, "virtual clock aborted");
    }
    yield_locked(lock, self);
  }
  user_lock.lock();
}

void VirtualClock::notify_all(Gate& gate) {
  std::vector<WorkerId> ids;
  ids.swap(gate.waiters);
  std::lock_guard lock(mutex_);
  for (WorkerId id : ids) queue_.emplace(now_, id);
}

void VirtualClock::request_stop() {
  std::lock_guard lock(mutex_);
  stop_ = true;
  for (const auto& [id, t] : sleeping_) {
    queue_.erase({t, id});
    queue_.emplace(now_, id);
  }
}

bool VirtualClock::stop_requested() const {
  std::lock_guard lock(mutex_);
  return stop_;
}

void VirtualClock::dispatch_next_locked() {
  if (queue_.empty()) {
    running_ = kIdle;
    if (alive_ > 0) {
      // Every live worker is parked on a gate with nothing left to wake it.
      aborted_ = true;
      for (auto& cv : wake_) cv->notify_all();
    }
    done_cv_.notify_all();
    return;
  }
  const auto [t, id] = *queue_.begin();
  queue_.erase(queue_.begin());
  now_ = t;
  log_.push_back({t, id});
  running_ = id;
  wake_[static_cast<std::size_t>(id)]->notify_one();
}

void VirtualClock::yield_locked(std::unique_lock<std::mutex>& lock, WorkerId self) {
  dispatch_next_locked();
  wake_[static_cast<std::size_t>(self)]->wait(lock, [&] { return running_ == self || aborted_; });
  if (running_ != self) throw Error(ErrorKind::Scheduling, "virtual clock deadlock: all workers blocked");
}

void VirtualClock::finish_worker(WorkerId self) {
  std::lock_guard lock(mutex_);
  --alive_;
  if (!aborted_ && running_ == self) dispatch_next_locked();
  if (alive_ == 0) done_cv_.notify_all();
}

void VirtualClock::run(std::vector<WorkerFn> workers) {
  const std::size_t n = workers.size();
  {
    std::lock_guard lock(mutex_);
    if (alive_ != 0) throw Error(ErrorKind::Usage, "virtual clock is already running workers");
    stop_ = false;
    aborted_ = false;
    queue_.clear();
    sleeping_.clear();
    wake_.clear();
    for (std::size_t i = 0; i < n; ++i) wake_.push_back(std::make_unique<std::condition_variable>());
    alive_ = static_cast<int>(n);
  }
  if (n == 0) return;

  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      const auto self = static_cast<WorkerId>(i);
      tl_owner = this;
      tl_worker = self;
      bool start = false;
      {
        std::unique_lock lock(mutex_);
        wake_[i]->wait(lock, [&] { return running_ == self || aborted_; });
        start = running_ == self;
      }
      if (start) {
        try {
          workers[i]();
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
      finish_worker(self);
      tl_owner = nullptr;
      tl_worker = -1;
    });
  }

  bool deadlocked = false;
  {
    std::unique_lock lock(mutex_);
    for (std::size_t i = 0; i < n; ++i) queue_.emplace(now_, static_cast<WorkerId>(i));
    dispatch_next_locked();
    done_cv_.wait(lock, [&] { return alive_ == 0; });
    deadlocked = aborted_;
    running_ = kIdle;
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (deadlocked) throw Error(ErrorKind::Scheduling, "virtual clock deadlock: all workers blocked");
}

std::vector<VirtualClock::Event> VirtualClock::event_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::string VirtualClock::event_log_text() const {
  std::ostringstream out;
  for (const auto& e : event_log()) out << e.time << ' ' << e.worker << '\n';
  return out.str();
}

std::unique_ptr<Clock> make_clock(ClockMode mode) {
  if (mode == ClockMode::Virtual) return std::make_unique<VirtualClock>();
  return std::make_unique<RealClock>();
}

}  // namespace rtsac
