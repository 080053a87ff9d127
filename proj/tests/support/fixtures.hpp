#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "rtsac/core/types.hpp"
#include "rtsac/envsim/envsim.hpp"
#include "rtsac/nn/network.hpp"

namespace rtsac::testing {

inline std::shared_ptr<const Image> random_image(std::mt19937_64& rng, int h, int w) {
  Image img(h, w);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& c : img.rgb) c = static_cast<std::uint8_t>(byte(rng));
  return std::make_shared<const Image>(std::move(img));
}

inline Observation random_observation(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Observation obs;
  for (std::size_t j = 0; j < kJoints; ++j) {
    obs.joint_positions[j] = u(rng);
    obs.joint_velocities[j] = u(rng);
    obs.last_action[j] = u(rng);
  }
  for (auto& f : obs.image_stack) f = random_image(rng, h, w);
  return obs;
}

inline Transition random_transition(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Transition t;
  t.obs = random_observation(rng, h, w);
  t.next_obs = random_observation(rng, h, w);
  for (auto& a : t.action.joint_velocity_command) a = u(rng);
  t.reward = 5.0 * (u(rng) + 1.0);
  return t;
}

// Small enough for finite differences to stay cheap.
inline nn::Architecture tiny_architecture() {
  nn::Architecture a;
  a.image_h = 9;
  a.image_w = 11;
  a.encoder = {{3, 3, 2}, {4, 3, 1}};
  a.trunk = {8, 6};
  return a;
}

inline envsim::EnvConfig small_env(Millis cycle_ms, int h = 24, int w = 40) {
  envsim::EnvConfig c;
  c.image_height = h;
  c.image_width = w;
  c.cycle_ms = cycle_ms;
  return c;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("rtsac_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace rtsac::testing
