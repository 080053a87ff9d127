#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rtsac/core/types.hpp"

namespace rtsac {

enum class ClockMode { Real, Virtual };

using WorkerId = int;
using WorkerFn = std::function<void()>;

// Condition-variable analogue that cooperates with the clock's scheduler. In
// virtual mode blocked workers are parked in `waiters` and re-enter the event
// queue on notify; in real mode `cv` is used directly.
struct Gate {
  std::condition_variable cv;
  std::vector<WorkerId> waiters;
};

class Clock {
 public:
  virtual ~Clock() = default;

  virtual ClockMode mode() const noexcept = 0;

  // Milliseconds since the clock was created. Monotonically non-decreasing.
  virtual Millis now() const = 0;
  // Same origin as now(), with sub-millisecond resolution in real mode.
  virtual double now_precise() const = 0;

  // Blocks the calling worker until `t`. Throws ErrorKind::Scheduling when t
  // is already in the past. Returns early once request_stop() was called.
  void sleep_until(Millis t);
  // Non-throwing variant: returns false without blocking when t < now().
  virtual bool try_sleep_until(Millis t) = 0;
  void sleep_for(Millis duration);

  // Runs the workers to completion. Worker ids are the vector indices. The
  // first exception escaping any worker is rethrown after all have joined.
  virtual void run(std::vector<WorkerFn> workers) = 0;

  // Scheduler-aware wait: `lock` must hold the mutex guarding the predicate.
  // Spurious returns are allowed; callers loop on their predicate.
  virtual void wait(Gate& gate, std::unique_lock<std::mutex>& lock) = 0;
  virtual void notify_all(Gate& gate) = 0;

  // Wakes every sleeping worker early. Cleared at the start of run().
  virtual void request_stop() = 0;
  virtual bool stop_requested() const = 0;
};

class RealClock final : public Clock {
 public:
  RealClock();

  ClockMode mode() const noexcept override { return ClockMode::Real; }
  Millis now() const override;
  double now_precise() const override;
  bool try_sleep_until(Millis t) override;
  void run(std::vector<WorkerFn> workers) override;
  void wait(Gate& gate, std::unique_lock<std::mutex>& lock) override;
  void notify_all(Gate& gate) override;
  void request_stop() override;
  bool stop_requested() const override;

 private:
  std::chrono::steady_clock::time_point origin_;
  mutable std::mutex mutex_;
  std::condition_variable stop_cv_;
  bool stop_ = false;
};

// Deterministic discrete-event scheduler. Worker threads run one at a time;
// control passes at sleep/wait points to the earliest pending event, ties
// broken by ascending worker id. Calls from outside run() simply advance time.
class VirtualClock final : public Clock {
 public:
  struct Event {
    Millis time;
    WorkerId worker;
    friend bool operator==(const Event&, const Event&) = default;
  };

  VirtualClock() = default;
  VirtualClock(const VirtualClock&) = delete;
  VirtualClock& operator=(const VirtualClock&) = delete;

  ClockMode mode() const noexcept override { return ClockMode::Virtual; }
  Millis now() const override;
  double now_precise() const override { return static_cast<double>(now()); }
  bool try_sleep_until(Millis t) override;
  void run(std::vector<WorkerFn> workers) override;
  void wait(Gate& gate, std::unique_lock<std::mutex>& lock) override;
  void notify_all(Gate& gate) override;
  void request_stop() override;
  bool stop_requested() const override;

  // Every dispatch in order: which worker resumed at what time.
  std::vector<Event> event_log() const;
  std::string event_log_text() const;

 private:
  static constexpr WorkerId kIdle = -1;

  bool is_own_worker() const noexcept;
  void dispatch_next_locked();
  void yield_locked(std::unique_lock<std::mutex>& lock, WorkerId self);
  void finish_worker(WorkerId self);

  mutable std::mutex mutex_;
  Millis now_ = 0;
  std::set<std::pair<Millis, WorkerId>> queue_;
  std::vector<std::pair<WorkerId, Millis>> sleeping_;
  std::vector<std::unique_ptr<std::condition_variable>> wake_;
  std::condition_variable done_cv_;
  WorkerId running_ = kIdle;
  int alive_ = 0;
  bool aborted_ = false;
  bool stop_ = false;
  std::vector<Event> log_;
};

std::unique_ptr<Clock> make_clock(ClockMode mode);

}  // namespace rtsac
