#pragma once

#include <memory>
#include <sstream>
#include <string>

#include "rtsac/core/clock.hpp"
#include "rtsac/pipeline/pipeline.hpp"
#include "rtsac/sac/sac.hpp"
#include "support/fixtures.hpp"

namespace rtsac::testing {

struct RigOptions {
  pipeline::Mode mode = pipeline::Mode::Async;
  Millis cycle_ms = 40;
  Millis training_ms = 60'000;
  Millis reset_ms = 4000;
  std::size_t init_steps = 0;
  pipeline::Delays delays{};
  std::size_t transition_capacity = 4096;
  std::size_t batch_capacity = 2;
  bool updater_paused = false;
  std::uint64_t seed = 1;
  int image_h = 6;
  int image_w = 10;
};

// Virtual-clock run with the random learner: timing behaviour only.
inline pipeline::RunLog run_rig(const RigOptions& o, const pipeline::RunHooks& hooks = {},
                                sac::Learner* learner = nullptr) {
  VirtualClock clock;
  envsim::EnvConfig env_cfg = small_env(o.cycle_ms, o.image_h, o.image_w);
  env_cfg.reset_ms = o.reset_ms;
  envsim::SimEnv env(env_cfg, derive_seed(o.seed, 1), clock);
  sac::RandomLearner fallback(derive_seed(o.seed, 2));
  pipeline::RunConfig rc;
  rc.mode = o.mode;
  rc.cycle_ms = o.cycle_ms;
  rc.training_ms = o.training_ms;
  rc.batch_size = 4;
  rc.buffer_capacity = static_cast<std::size_t>(o.training_ms / o.cycle_ms) + 1000;
  rc.init_steps = o.init_steps;
  rc.transition_capacity = o.transition_capacity;
  rc.batch_capacity = o.batch_capacity;
  rc.delays = o.delays;
  rc.updater_paused = o.updater_paused;
  rc.seed = o.seed;
  return pipeline::run(rc, env, learner ? *learner : fallback, clock, hooks);
}

inline std::string csv_of(const pipeline::RunLog& log) {
  std::ostringstream out;
  pipeline::write_steps_csv(log, out);
  pipeline::write_updates_csv(log, out);
  pipeline::write_timing_csv(log, out);
  return out.str();
}

}  // namespace rtsac::testing
