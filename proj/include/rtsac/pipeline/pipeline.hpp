#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rtsac/core/clock.hpp"
#include "rtsac/core/types.hpp"
#include "rtsac/envsim/envsim.hpp"
#include "rtsac/sac/sac.hpp"

namespace rtsac::pipeline {

enum class Mode { Sync, Async };

// Declared compute time of each component, spent on the clock. In virtual
// mode these are the only source of elapsed time.
struct Delays {
  Millis observe = 0;
  Millis act = 0;
  Millis store = 0;
  Millis sample = 0;
  Millis grad = 0;
  // Asynchronous only: the sampler starts this late, letting transitions pile
  // up in the channel.
  Millis sampler_stall = 0;
};

struct RunConfig {
  Mode mode = Mode::Async;
  Millis cycle_ms = 40;
  // Run ends at the first episode boundary where the summed realized cycle
  // time reaches this value. Resets are not counted.
  Millis training_ms = 0;
  std::size_t batch_size = 128;
  std::size_t buffer_capacity = 0;
  std::size_t init_steps = 0;
  std::size_t transition_capacity = 4096;
  std::size_t batch_capacity = 2;
  Delays delays{};
  // Asynchronous only: the updater never runs, so the weights stay at the
  // initial snapshot.
  bool updater_paused = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TimingRecord {
  std::int64_t step_index = 0;
  double t_observe_ms = 0.0;
  double t_act_ms = 0.0;
  double t_store_ms = 0.0;
  double t_sample_ms = 0.0;
  double t_grad_ms = 0.0;
  double realized_cycle_ms = 0.0;
  bool deadline_missed = false;
};

struct StepRow {
  std::int64_t step = 0;
  std::int64_t episode = 0;
  double t_ms = 0.0;
  double reward = 0.0;
  double realized_cycle_ms = 0.0;
  bool deadline_missed = false;
  std::uint64_t weights_version = 0;
  std::uint64_t drops = 0;
};

struct UpdateRow {
  std::uint64_t update = 0;
  double t_ms = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
};

struct RunLog {
  std::vector<StepRow> steps;
  std::vector<UpdateRow> updates;
  std::vector<TimingRecord> timing;
  // Returns of completed episodes.
  std::vector<double> episode_returns;
  std::optional<std::string> failure;
  std::uint64_t drops = 0;
  std::size_t max_channel_occupancy = 0;
  double training_ms = 0.0;
  double end_ms = 0.0;

  std::int64_t missed_deadlines() const noexcept;
  double mean_realized_cycle_ms() const noexcept;
};

struct RunHooks {
  std::function<void(const Transition&)> on_transition_produced;
  std::function<void(const Transition&)> on_transition_stored;
};

// Observe, act, step the environment, store, then (past warm-up) sample and
// update, then sleep to the next cycle boundary. A late step is logged as a
// missed deadline and the next one starts at once.
RunLog run_sync(const RunConfig& config, envsim::SimEnv& env, sac::Learner& learner, Clock& clock,
                const RunHooks& hooks = {});

// Interaction, sampler and updater workers connected by a TransitionChannel,
// a BatchChannel and a WeightStore.
RunLog run_async(const RunConfig& config, envsim::SimEnv& env, sac::Learner& learner, Clock& clock,
                 const RunHooks& hooks = {});

RunLog run(const RunConfig& config, envsim::SimEnv& env, sac::Learner& learner, Clock& clock,
           const RunHooks& hooks = {});

// Measures one component: the declared delay is spent on the clock around the
// work, and the elapsed clock time is returned.
double timed(Clock& clock, Millis delay, const std::function<void()>& work);

// Shortest round-trip decimal form.
std::string format_number(double value);

void write_steps_csv(const RunLog& log, std::ostream& out);
void write_updates_csv(const RunLog& log, std::ostream& out);
void write_timing_csv(const RunLog& log, std::ostream& out);

inline constexpr const char* kStepsHeader = "step,episode,t_ms,reward,realized_cycle_ms,deadline_missed,weights_version,drops";
inline constexpr const char* kUpdatesHeader = "update,t_ms,critic_loss,actor_loss,alpha";
inline constexpr const char* kTimingHeader =
    "step,t_observe_ms,t_act_ms,t_store_ms,t_sample_ms,t_grad_ms,realized_cycle_ms,deadline_missed";

}  // namespace rtsac::pipeline
