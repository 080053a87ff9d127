#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace rtsac {

using Millis = std::int64_t;

inline constexpr std::size_t kJoints = 7;
inline constexpr std::size_t kStackFrames = 3;
inline constexpr std::size_t kProprioDim = 3 * kJoints;

using JointVector = std::array<double, kJoints>;

// 8-bit RGB frame, row-major, 3 interleaved channels per pixel.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, fill) {}

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height) * width;
  }
  std::uint8_t* pixel(int row, int col) noexcept {
    return rgb.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }
  const std::uint8_t* pixel(int row, int col) const noexcept {
    return rgb.data() + (static_cast<std::size_t>(row) * width + col) * 3;
  }
  friend bool operator==(const Image&, const Image&) = default;
};

// Frames are immutable once rendered; consecutive observations share them.
using FramePtr = std::shared_ptr<const Image>;

struct Observation {
  JointVector joint_positions{};
  JointVector joint_velocities{};
  JointVector last_action{};
  std::array<FramePtr, kStackFrames> image_stack{};

  // Throws InvalidInput when a frame is missing, frame sizes differ, a vector
  // component is non-finite or last_action leaves [-1, 1].
  void validate() const;

  int image_height() const noexcept { return image_stack[0] ? image_stack[0]->height : 0; }
  int image_width() const noexcept { return image_stack[0] ? image_stack[0]->width : 0; }

  // joint positions, joint velocities, last action.
  std::array<double, kProprioDim> proprioception() const noexcept;
};

bool same_content(const Observation& a, const Observation& b) noexcept;

struct Action {
  JointVector joint_velocity_command{};
  friend bool operator==(const Action&, const Action&) = default;
};

struct Transition {
  Observation obs;
  Action action;
  double reward = 0.0;
  Observation next_obs;
  // Marks the time-limit boundary of an episode. Never zeroes bootstrapping.
  bool terminal = false;
};

bool same_content(const Transition& a, const Transition& b) noexcept;

struct MdpSpec {
  double gamma = 0.99;
  // Fixed start pose plus uniform target placement; the numbers live in the
  // environment config, this records which distribution is in force.
  std::array<double, 3> start_camera_cm{20.0, 30.0, 30.0};
  std::array<double, 2> placement_x_cm{10.0, 30.0};
  std::array<double, 2> placement_y_cm{12.0, 48.0};
  std::int64_t horizon_steps = 150;

  static MdpSpec make(double gamma, Millis episode_ms, Millis cycle_ms);
};

// Component-wise clamp to [-1, 1]; rejects non-finite input.
Action clamp_action(std::span<const double> raw);

// floor(episode_ms / cycle_ms).
std::int64_t horizon_steps(Millis episode_ms, Millis cycle_ms);

// Independent seed for a named sub-stream (splitmix64 of base ^ stream).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

// Buffer warm-up length that keeps the 5000-of-108000 ratio used for the
// asynchronous runs: floor(total_steps * 5000 / 108000).
std::int64_t buffer_init_steps(std::int64_t total_steps);

}  // namespace rtsac
