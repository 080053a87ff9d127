#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "rtsac/core/clock.hpp"
#include "rtsac/core/types.hpp"

namespace rtsac::envsim {

using Vec3 = std::array<double, 3>;
using KinematicMap = std::array<std::array<double, kJoints>, 3>;

// Workspace box in cm: [0,40] x [0,60] x [0,30].
inline constexpr Vec3 kBoxMax{40.0, 60.0, 30.0};

struct RedThreshold {
  std::uint8_t r_min = 200;
  std::uint8_t g_max = 80;
  std::uint8_t b_max = 80;
};

struct EnvConfig {
  int image_width = 160;
  int image_height = 90;
  Millis cycle_ms = 40;
  Millis episode_ms = 6000;
  Millis reset_ms = 4000;

  // Camera velocity (cm/s) = velocity_scale_cm_s * K * action.
  KinematicMap kinematics = default_kinematics();
  double velocity_scale_cm_s = 10.0;
  // Joint velocity (rad/s) reported for a unit command.
  double joint_speed_rad_s = 1.0;
  double joint_limit_rad = 2.9;

  Vec3 start_camera_cm{20.0, 30.0, 30.0};
  std::array<double, 2> placement_x_cm{10.0, 30.0};
  std::array<double, 2> placement_y_cm{12.0, 48.0};
  // Table plane sits this far below the box floor.
  double table_gap_cm = 5.0;
  double target_radius_cm = 3.0;
  // Focal length in pixels is focal_scale * image_height.
  double focal_scale = 1.25;

  double reward_alpha = 0.25;
  RedThreshold threshold{};
  bool pixel_noise = false;
  int noise_amplitude = 8;

  static KinematicMap default_kinematics();
  // Throws ErrorKind::Configuration on inconsistent values (including a
  // rank-deficient kinematic map).
  void validate() const;
};

struct ArmState {
  JointVector joint_positions{};
  JointVector joint_velocities{};
  Vec3 camera_position{};
};

struct TargetSpec {
  Vec3 position{};  // on the table plane
  double radius_cm = 3.0;
  std::array<std::uint8_t, 3> color{255, 0, 0};
};

struct RewardParams {
  double alpha = 0.25;
  double delta_t_ms = 40.0;
  int h = 90;
  int w = 160;
};

struct Camera {
  double focal_px;
  int height;
  int width;
};

inline constexpr std::array<std::uint8_t, 3> kBackground{40, 40, 40};

Camera make_camera(const EnvConfig& config);

// Projects the target as a filled disc of radius f * radius_cm / d.
Image render(const ArmState& arm, const TargetSpec& target, const Camera& camera);

// 0-1 matrix, row-major h x w.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;
  std::size_t count() const noexcept;
};

Mask compute_mask(const Image& image, int expected_h, int expected_w, const RedThreshold& threshold = {});
double compute_reward(const Mask& mask, const RewardParams& params);

Vec3 clamp_box(const Vec3& p) noexcept;

// Binary PPM (P6), 8-bit channels, row-major.
void write_ppm(const Image& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const Image& image);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool episode_done = false;
};

// Simulated camera-on-arm reacher. Owned by a single interaction worker.
class SimEnv {
 public:
  SimEnv(EnvConfig config, std::uint64_t seed, Clock& clock);

  // Returns the arm to the start pose, samples a new target and advances the
  // clock by reset_ms.
  Observation reset();
  StepResult step(const Action& action);

  const ArmState& arm() const noexcept { return arm_; }
  const TargetSpec& target() const noexcept { return target_; }
  const EnvConfig& config() const noexcept { return config_; }
  std::int64_t horizon() const noexcept { return horizon_; }
  std::int64_t steps_in_episode() const noexcept { return steps_; }
  RewardParams reward_params() const noexcept;

  // Camera displacement over one cycle for a (clamped) action.
  Vec3 displacement(const Action& action) const noexcept;

 private:
  FramePtr render_frame();
  Observation make_observation() const;

  EnvConfig config_;
  Clock& clock_;
  Camera camera_;
  std::mt19937_64 rng_;
  ArmState arm_;
  TargetSpec target_;
  JointVector last_action_{};
  std::array<FramePtr, kStackFrames> stack_{};
  std::int64_t horizon_;
  std::int64_t steps_ = 0;
  bool active_ = false;
};

}  // namespace rtsac::envsim
