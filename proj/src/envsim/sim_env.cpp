#include <algorithm>
#include <cmath>
#include <string>

#include "rtsac/core/error.hpp"
#include "rtsac/envsim/envsim.hpp"

namespace rtsac::envsim {

KinematicMap EnvConfig::default_kinematics() {
  // Each row has unit L1 norm, so a saturated command moves the camera at
  // most velocity_scale_cm_s along every axis.
  return {{
      {0.40, 0.00, 0.00, 0.30, 0.00, 0.00, 0.30},
      {0.00, 0.40, 0.00, 0.00, 0.30, 0.00, -0.30},
      {0.00, 0.00, 0.50, 0.00, 0.00, 0.50, 0.00},
  }};
}

namespace {

double det3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

void check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::Configuration, "environment: " + what);
}

}  // namespace

void EnvConfig::validate() const {
  check(image_width > 0 && image_height > 0, "image dimensions must be positive");
  check(cycle_ms > 0, "action cycle must be positive");
  check(episode_ms >= cycle_ms, "episode must last at least one cycle");
  check(reset_ms >= 0, "reset duration must be non-negative");
  check(velocity_scale_cm_s > 0.0, "velocity scale must be positive");
  check(joint_speed_rad_s > 0.0 && joint_limit_rad > 0.0, "joint limits must be positive");
  check(table_gap_cm > 0.0 && target_radius_cm > 0.0, "table gap and target radius must be positive");
  check(focal_scale > 0.0, "focal scale must be positive");
  check(reward_alpha > 0.0, "reward alpha must be positive");
  check(noise_amplitude >= 0 && noise_amplitude <= 255, "noise amplitude out of range");
  for (std::size_t i = 0; i < 3; ++i) {
    check(start_camera_cm[i] >= 0.0 && start_camera_cm[i] <= kBoxMax[i], "start pose outside the box");
  }
  check(placement_x_cm[0] <= placement_x_cm[1] && placement_y_cm[0] <= placement_y_cm[1],
        "placement region is empty");
  check(placement_x_cm[0] >= 0.0 && placement_x_cm[1] <= kBoxMax[0] && placement_y_cm[0] >= 0.0 &&
            placement_y_cm[1] <= kBoxMax[1],
        "placement region outside the box footprint");
  std::array<std::array<double, 3>, 3> gram{};
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t j = 0; j < kJoints; ++j) {
        check(std::isfinite(kinematics[a][j]), "kinematic map has a non-finite entry");
        gram[a][b] += kinematics[a][j] * kinematics[b][j];
      }
    }
  }
  check(std::abs(det3(gram)) > 1e-9, "kinematic map must have rank 3");
}

SimEnv::SimEnv(EnvConfig config, std::uint64_t seed, Clock& clock)
    : config_(std::move(config)),
      clock_(clock),
      camera_(make_camera(config_)),
      rng_(seed),
      horizon_(horizon_steps(config_.episode_ms, config_.cycle_ms)) {
  config_.validate();
}

RewardParams SimEnv::reward_params() const noexcept {
  return RewardParams{config_.reward_alpha, static_cast<double>(config_.cycle_ms),
                      config_.image_height, config_.image_width};
}

Vec3 SimEnv::displacement(const Action& action) const noexcept {
  const double dt = static_cast<double>(config_.cycle_ms) / 1000.0;
  Vec3 d{};
  for (std::size_t axis = 0; axis < 3; ++axis) {
    double v = 0.0;
    for (std::size_t j = 0; j < kJoints; ++j) {
      v += config_.kinematics[axis][j] * action.joint_velocity_command[j];
    }
    d[axis] = config_.velocity_scale_cm_s * v * dt;
  }
  return d;
}

FramePtr SimEnv::render_frame() {
  Image frame = render(arm_, target_, camera_);
  if (config_.pixel_noise && config_.noise_amplitude > 0) {
    std::uniform_int_distribution<int> noise(-config_.noise_amplitude, config_.noise_amplitude);
    for (auto& c : frame.rgb) c = static_cast<std::uint8_t>(std::clamp(c + noise(rng_), 0, 255));
  }
  return std::make_shared<const Image>(std::move(frame));
}

Observation SimEnv::make_observation() const {
  Observation obs;
  obs.joint_positions = arm_.joint_positions;
  obs.joint_velocities = arm_.joint_velocities;
  obs.last_action = last_action_;
  obs.image_stack = stack_;
  return obs;
}

Observation SimEnv::reset() {
  arm_ = ArmState{};
  arm_.camera_position = config_.start_camera_cm;
  last_action_ = {};
  std::uniform_real_distribution<double> px(config_.placement_x_cm[0], config_.placement_x_cm[1]);
  std::uniform_real_distribution<double> py(config_.placement_y_cm[0], config_.placement_y_cm[1]);
  target_.position[0] = px(rng_);
  target_.position[1] = py(rng_);
  target_.position[2] = -config_.table_gap_cm;
  target_.radius_cm = config_.target_radius_cm;
  clock_.sleep_for(config_.reset_ms);
  const FramePtr first = render_frame();
  stack_.fill(first);
  steps_ = 0;
  active_ = true;
  return make_observation();
}

StepResult SimEnv::step(const Action& raw) {
  if (!active_) {
    throw Error(ErrorKind::EpisodeOver, "step called after " + std::to_string(horizon_) +
                                            " steps; reset the environment first");
  }
  const Action action = clamp_action(raw.joint_velocity_command);
  const Vec3 d = displacement(action);
  Vec3 moved = arm_.camera_position;
  for (std::size_t i = 0; i < 3; ++i) moved[i] += d[i];
  arm_.camera_position = clamp_box(moved);

  const double dt = static_cast<double>(config_.cycle_ms) / 1000.0;
  for (std::size_t j = 0; j < kJoints; ++j) {
    const double a = action.joint_velocity_command[j];
    arm_.joint_velocities[j] = a * config_.joint_speed_rad_s;
    arm_.joint_positions[j] = std::clamp(arm_.joint_positions[j] + arm_.joint_velocities[j] * dt,
                                         -config_.joint_limit_rad, config_.joint_limit_rad);
  }
  last_action_ = action.joint_velocity_command;

  FramePtr frame = render_frame();
  stack_[0] = stack_[1];
  stack_[1] = stack_[2];
  stack_[2] = frame;

  const Mask mask = compute_mask(*frame, config_.image_height, config_.image_width, config_.threshold);
  StepResult result;
  result.reward = compute_reward(mask, reward_params());
  ++steps_;
  result.episode_done = steps_ >= horizon_;
  if (result.episode_done) active_ = false;
  result.observation = make_observation();
  return result;
}

}  // namespace rtsac::envsim
