#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtsac/harness/config.hpp"
#include "rtsac/pipeline/pipeline.hpp"

namespace rtsac::harness {

struct RunSummary {
  std::string setting;
  std::uint64_t seed = 0;
  std::vector<double> episode_returns;
  std::int64_t total_steps = 0;
  std::int64_t total_updates = 0;
  double mean_cycle_ms = 0.0;
  std::uint64_t drops = 0;
  std::int64_t missed_deadlines = 0;
  std::optional<std::string> failure;

  friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

RunSummary summarize(const pipeline::RunLog& log, Setting setting, std::uint64_t seed);

std::unique_ptr<sac::Learner> make_learner(const ExperimentConfig& config, std::uint64_t seed);

// One seed, nothing written.
pipeline::RunLog run_single(const ExperimentConfig& config, std::uint64_t seed);

// Every seed in turn; a failing seed is recorded and the rest still run.
// Writes <output_dir>/<setting>/seed_<N>_{steps,updates,timing}.csv.
std::vector<RunSummary> run_experiment(const ExperimentConfig& config);

std::filesystem::path run_prefix(const std::filesystem::path& dir, std::string_view setting, std::uint64_t seed);
void write_run(const pipeline::RunLog& log, const std::filesystem::path& prefix);

// Rebuilds a summary from the files written by write_run. The last episode
// counts only when it is as long as the first.
RunSummary read_run(const std::filesystem::path& prefix);

// <dir>/<setting>/seed_<N>_steps.csv for every setting directory present.
std::map<std::string, std::vector<RunSummary>> read_runs(const std::filesystem::path& dir);

// Mean per-step component times of one setting directory, read from the
// timing files.
struct ComponentTimes {
  double observe = 0.0;
  double act = 0.0;
  double store = 0.0;
  double sample = 0.0;
  double grad = 0.0;
  double cycle = 0.0;
  std::size_t steps = 0;
};
ComponentTimes read_component_times(const std::filesystem::path& setting_dir);

}  // namespace rtsac::harness
