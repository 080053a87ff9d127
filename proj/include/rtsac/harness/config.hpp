#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rtsac/core/clock.hpp"
#include "rtsac/envsim/envsim.hpp"
#include "rtsac/nn/network.hpp"
#include "rtsac/pipeline/pipeline.hpp"
#include "rtsac/sac/sac.hpp"

namespace rtsac::harness {

enum class Setting { AsyncBaseline, SyncBaseline, AsyncHighres, SyncHighres };
enum class Preset { Full, Desk };
enum class LearnerKind { Sac, Random };

std::string_view to_string(Setting s) noexcept;
std::string_view to_string(Preset p) noexcept;
std::string_view to_string(LearnerKind k) noexcept;
Setting parse_setting(std::string_view text);
pipeline::Mode mode_of(Setting s) noexcept;
bool is_highres(Setting s) noexcept;

struct ExperimentConfig {
  Setting setting = Setting::AsyncBaseline;
  Preset preset = Preset::Desk;
  int image_width = 40;
  int image_height = 24;
  std::size_t batch_size = 32;
  Millis cycle_ms = 40;
  Millis episode_ms = 6000;
  Millis reset_ms = 4000;
  double training_minutes = 30.0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  ClockMode clock_mode = ClockMode::Virtual;
  LearnerKind learner = LearnerKind::Sac;
  pipeline::Delays delays{};
  std::filesystem::path output_dir = "runs";
  // 0 means one slot per step of the run.
  std::size_t buffer_capacity = 0;
  std::size_t transition_capacity = 4096;
  std::size_t batch_capacity = 2;
  sac::SacHyper hyper{};
  envsim::EnvConfig env{};
  // Every n-th rendered frame is written as PPM under the output directory.
  std::int64_t frame_dump_every = 0;

  Millis training_ms() const;
  std::int64_t horizon() const;
  std::int64_t total_steps() const;
  std::int64_t episodes() const;
  std::size_t init_steps() const;

  envsim::EnvConfig env_config() const;
  nn::Architecture architecture() const;
  pipeline::RunConfig run_config(std::uint64_t seed) const;

  // Throws ErrorKind::Configuration naming the offending key.
  void validate() const;
};

// Defaults of one setting under a preset, before any key is applied.
ExperimentConfig defaults_for(Setting setting, Preset preset);

// Flat `key = value` text, `#` starts a comment. `setting` and `preset` are
// applied first, then every other key, then the overrides ("key=value").
ExperimentConfig parse_config(std::string_view text, std::span<const std::string> overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});

// Every key with its current value; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& config);

// Names of all recognised keys, in documentation order.
std::vector<std::string> config_keys();

}  // namespace rtsac::harness
