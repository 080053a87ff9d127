#include "rtsac/pipeline/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <mutex>
#include <ostream>
#include <random>

#include "rtsac/core/error.hpp"
#include "rtsac/pipeline/channels.hpp"
#include "rtsac/pipeline/weight_store.hpp"

namespace rtsac::pipeline {

namespace {

constexpr std::uint64_t kActionStream = 10;
constexpr std::uint64_t kBufferStream = 11;
constexpr std::uint64_t kPolicyStream = 12;

void check_delays(const Delays& d) {
  if (d.observe < 0 || d.act < 0 || d.store < 0 || d.sample < 0 || d.grad < 0 || d.sampler_stall < 0) {
    throw Error(ErrorKind::Configuration, "injected delays must be non-negative");
  }
}

void check_env(const RunConfig& config, const envsim::SimEnv& env) {
  if (env.config().cycle_ms != config.cycle_ms) {
    throw Error(ErrorKind::Configuration, "environment cycle (" + std::to_string(env.config().cycle_ms) +
                                              " ms) differs from the run cycle (" +
                                              std::to_string(config.cycle_ms) + " ms)");
  }
}

std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const Error& err) {
    return std::string(to_string(err.kind())) + ": " + err.what();
  } catch (const std::exception& err) {
    return err.what();
  } catch (...) {
    return "unknown failure";
  }
}

Millis d_total(const Delays& d) { return d.sample + d.grad; }

// Per-episode bookkeeping shared by both loops.
class EpisodeTracker {
 public:
  void add(double reward) { current_ += reward; }
  void finish(RunLog& log) {
    log.episode_returns.push_back(current_);
    current_ = 0.0;
    ++episode_;
  }
  std::int64_t episode() const noexcept { return episode_; }

 private:
  double current_ = 0.0;
  std::int64_t episode_ = 0;
};

// Sleeps to the cycle boundary, or marks the step late.
void close_cycle(Clock& clock, double start, Millis cycle_ms, TimingRecord& timing) {
  const double deadline = start + static_cast<double>(cycle_ms);
  const double end = clock.now_precise();
  if (end > deadline) {
    timing.deadline_missed = true;
    timing.realized_cycle_ms = end - start;
    return;
  }
  clock.try_sleep_until(static_cast<Millis>(std::ceil(deadline)));
  timing.realized_cycle_ms =
      clock.mode() == ClockMode::Virtual ? static_cast<double>(cycle_ms) : clock.now_precise() - start;
}

}  // namespace

void RunConfig::validate() const {
  if (cycle_ms <= 0) throw Error(ErrorKind::Configuration, "cycle_ms must be positive");
  if (training_ms <= 0) throw Error(ErrorKind::Configuration, "training_ms must be positive");
  if (batch_size == 0) throw Error(ErrorKind::Configuration, "batch_size must be positive");
  if (buffer_capacity == 0) throw Error(ErrorKind::Configuration, "buffer_capacity must be positive");
  if (transition_capacity == 0 || batch_capacity == 0) {
    throw Error(ErrorKind::Configuration, "channel capacities must be positive");
  }
  check_delays(delays);
}

std::int64_t RunLog::missed_deadlines() const noexcept {
  std::int64_t n = 0;
  for (const auto& s : steps) n += s.deadline_missed ? 1 : 0;
  return n;
}

double RunLog::mean_realized_cycle_ms() const noexcept {
  if (steps.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : steps) sum += s.realized_cycle_ms;
  return sum / static_cast<double>(steps.size());
}

double timed(Clock& clock, Millis delay, const std::function<void()>& work) {
  const double start = clock.now_precise();
  if (work) work();
  if (delay > 0) clock.sleep_for(delay);
  return clock.now_precise() - start;
}

// --- synchronous -----------------------------------------------------------

RunLog run_sync(const RunConfig& config, envsim::SimEnv& env, sac::Learner& learner, Clock& clock,
                const RunHooks& hooks) {
  config.validate();
  check_env(config, env);
  RunLog log;
  sac::ReplayBuffer buffer(config.buffer_capacity, config.init_steps, derive_seed(config.seed, kBufferStream));
  std::mt19937_64 action_rng(derive_seed(config.seed, kActionStream));
  const Delays& d = config.delays;

  auto body = [&] {
    EpisodeTracker episodes;
    Observation obs = env.reset();
    std::int64_t step = 0;
    double training = 0.0;
    while (true) {
      TimingRecord timing;
      timing.step_index = step;
      const double start = clock.now_precise();
      timing.t_observe_ms = timed(clock, d.observe, nullptr);

      Action action;
      timing.t_act_ms = timed(clock, d.act, [&] {
        action = step < static_cast<std::int64_t>(config.init_steps) ? sac::uniform_action(action_rng)
                                                                     : learner.act(obs, sac::ActMode::Stochastic);
      });
      envsim::StepResult result = env.step(action);
      Transition transition{obs, action, result.reward, result.observation, result.episode_done};
      if (hooks.on_transition_produced) hooks.on_transition_produced(transition);

      timing.t_store_ms = timed(clock, d.store, [&] {
        buffer.push(transition);
        if (hooks.on_transition_stored) hooks.on_transition_stored(transition);
      });

      if (step >= static_cast<std::int64_t>(config.init_steps)) {
        sac::Batch batch;
        timing.t_sample_ms = timed(clock, d.sample, [&] { batch = buffer.sample(config.batch_size); });
        sac::UpdateMetrics metrics;
        timing.t_grad_ms = timed(clock, d.grad, [&] { metrics = learner.update(batch); });
        log.updates.push_back(
            {metrics.update_index, clock.now_precise(), metrics.critic_loss, metrics.actor_loss, metrics.alpha});
      }

      close_cycle(clock, start, config.cycle_ms, timing);
      training += timing.realized_cycle_ms;
      episodes.add(result.reward);
      log.steps.push_back({step, episodes.episode(), start, result.reward, timing.realized_cycle_ms,
                           timing.deadline_missed, learner.update_count() + 1, 0});
      log.timing.push_back(timing);
      log.training_ms = training;
      obs = std::move(result.observation);
      ++step;

      if (result.episode_done) {
        episodes.finish(log);
        if (training >= static_cast<double>(config.training_ms)) break;
        obs = env.reset();
      }
    }
  };

  try {
    clock.run({[&] { body(); }});
  } catch (...) {
    log.failure = describe(std::current_exception());
  }
  log.max_channel_occupancy = 0;
  log.end_ms = clock.now_precise();
  return log;
}

// --- asynchronous ----------------------------------------------------------

RunLog run_async(const RunConfig& config, envsim::SimEnv& env, sac::Learner& learner, Clock& clock,
                 const RunHooks& hooks) {
  config.validate();
  check_env(config, env);
  if (clock.mode() == ClockMode::Virtual && d_total(config.delays) == 0) {
    throw Error(ErrorKind::Configuration,
                "asynchronous virtual runs need a positive sample or grad delay; otherwise updates take no time");
  }
  RunLog log;
  TransitionChannel transitions(config.transition_capacity, clock);
  BatchChannel batches(config.batch_capacity, clock);
  WeightStore store;
  store.publish(learner.publish());
  const Delays& d = config.delays;

  std::mutex failure_mutex;
  auto shutdown = [&] {
    clock.request_stop();
    transitions.close();
    batches.close();
  };
  auto guarded = [&](const std::function<void()>& work) {
    return [&, work] {
      try {
        work();
      } catch (...) {
        {
          std::lock_guard lock(failure_mutex);
          if (!log.failure) log.failure = describe(std::current_exception());
        }
        shutdown();
      }
    };
  };

  auto interaction = [&] {
    std::unique_ptr<sac::Policy> policy = learner.make_policy(derive_seed(config.seed, kPolicyStream));
    std::mt19937_64 action_rng(derive_seed(config.seed, kActionStream));
    std::uint64_t version = 0;
    auto refresh = [&] {
      if (store.version() == version) return;
      if (auto snap = store.fetch_latest()) {
        policy->load(*snap);
        version = snap->version;
      }
    };
    refresh();

    EpisodeTracker episodes;
    Observation obs = env.reset();
    std::int64_t step = 0;
    double training = 0.0;
    while (!clock.stop_requested()) {
      TimingRecord timing;
      timing.step_index = step;
      const double start = clock.now_precise();
      timing.t_observe_ms = timed(clock, d.observe, nullptr);

      Action action;
      timing.t_act_ms = timed(clock, d.act, [&] {
        refresh();
        action = step < static_cast<std::int64_t>(config.init_steps) ? sac::uniform_action(action_rng)
                                                                     : policy->act(obs, sac::ActMode::Stochastic);
      });
      envsim::StepResult result = env.step(action);
      Transition transition{obs, action, result.reward, result.observation, result.episode_done};
      if (hooks.on_transition_produced) hooks.on_transition_produced(transition);
      timing.t_store_ms = timed(clock, d.store, [&] { transitions.push(std::move(transition)); });

      close_cycle(clock, start, config.cycle_ms, timing);
      training += timing.realized_cycle_ms;
      episodes.add(result.reward);
      log.steps.push_back({step, episodes.episode(), start, result.reward, timing.realized_cycle_ms,
                           timing.deadline_missed, version, transitions.drops()});
      log.timing.push_back(timing);
      log.training_ms = training;
      obs = std::move(result.observation);
      ++step;

      if (result.episode_done) {
        episodes.finish(log);
        if (training >= static_cast<double>(config.training_ms)) break;
        obs = env.reset();
      }
    }
    shutdown();
  };

  auto sampler = [&] {
    sac::ReplayBuffer buffer(config.buffer_capacity, config.init_steps, derive_seed(config.seed, kBufferStream));
    auto store_all = [&](std::vector<Transition> items) {
      for (auto& t : items) {
        buffer.push(t);
        if (hooks.on_transition_stored) hooks.on_transition_stored(t);
      }
    };
    if (d.sampler_stall > 0) clock.sleep_for(d.sampler_stall);
    while (true) {
      if (!buffer.warm()) {
        auto items = transitions.drain_wait();
        if (items.empty()) break;
        store_all(std::move(items));
        continue;
      }
      store_all(transitions.drain());
      if (transitions.closed()) break;
      sac::Batch batch;
      timed(clock, d.sample, [&] { batch = buffer.sample(config.batch_size); });
      if (!batches.push(std::move(batch))) break;
    }
    store_all(transitions.drain());
  };

  auto updater = [&] {
    if (config.updater_paused) return;
    while (auto batch = batches.pop()) {
      sac::UpdateMetrics metrics;
      timed(clock, d.grad, [&] { metrics = learner.update(*batch); });
      store.publish(learner.publish());
      log.updates.push_back(
          {metrics.update_index, clock.now_precise(), metrics.critic_loss, metrics.actor_loss, metrics.alpha});
    }
  };

  try {
    clock.run({guarded(interaction), guarded(sampler), guarded(updater)});
  } catch (...) {
    if (!log.failure) log.failure = describe(std::current_exception());
  }
  log.drops = transitions.drops();
  log.max_channel_occupancy = transitions.max_occupancy();
  log.end_ms = clock.now_precise();
  return log;
}

RunLog run(const RunConfig& config, envsim::SimEnv& env, sac::Learner& learner, Clock& clock,
           const RunHooks& hooks) {
  return config.mode == Mode::Sync ? run_sync(config, env, learner, clock, hooks)
                                   : run_async(config, env, learner, clock, hooks);
}

// --- CSV -------------------------------------------------------------------

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_steps_csv(const RunLog& log, std::ostream& out) {
  out << kStepsHeader << '\n';
  for (const auto& s : log.steps) {
    out << s.step << ',' << s.episode << ',' << format_number(s.t_ms) << ',' << format_number(s.reward) << ','
        << format_number(s.realized_cycle_ms) << ',' << (s.deadline_missed ? 1 : 0) << ',' << s.weights_version
        << ',' << s.drops << '\n';
  }
}

void write_updates_csv(const RunLog& log, std::ostream& out) {
  out << kUpdatesHeader << '\n';
  for (const auto& u : log.updates) {
    out << u.update << ',' << format_number(u.t_ms) << ',' << format_number(u.critic_loss) << ','
        << format_number(u.actor_loss) << ',' << format_number(u.alpha) << '\n';
  }
}

void write_timing_csv(const RunLog& log, std::ostream& out) {
  out << kTimingHeader << '\n';
  for (const auto& t : log.timing) {
    out << t.step_index << ',' << format_number(t.t_observe_ms) << ',' << format_number(t.t_act_ms) << ','
        << format_number(t.t_store_ms) << ',' << format_number(t.t_sample_ms) << ',' << format_number(t.t_grad_ms)
        << ',' << format_number(t.realized_cycle_ms) << ',' << (t.deadline_missed ? 1 : 0) << '\n';
  }
}

}  // namespace rtsac::pipeline
