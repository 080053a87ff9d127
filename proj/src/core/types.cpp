#include "rtsac/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rtsac/core/error.hpp"

namespace rtsac {

namespace {

void require_finite(const JointVector& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::InvalidInput, std::string(what) + " has a non-finite component");
    }
  }
}

bool same_frames(const Observation& a, const Observation& b) noexcept {
  for (std::size_t i = 0; i < kStackFrames; ++i) {
    const auto& fa = a.image_stack[i];
    const auto& fb = b.image_stack[i];
    if (fa == fb) continue;
    if (!fa || !fb || !(*fa == *fb)) return false;
  }
  return true;
}

}  // namespace

void Observation::validate() const {
  const FramePtr& first = image_stack[0];
  if (!first) throw Error(ErrorKind::InvalidInput, "observation image stack is incomplete");
  for (const auto& frame : image_stack) {
    if (!frame) throw Error(ErrorKind::InvalidInput, "observation image stack is incomplete");
    if (frame->height != first->height || frame->width != first->width ||
        frame->rgb.size() != frame->pixel_count() * 3) {
      throw Error(ErrorKind::InvalidInput, "observation frames differ in size");
    }
  }
  require_finite(joint_positions, "joint_positions");
  require_finite(joint_velocities, "joint_velocities");
  require_finite(last_action, "last_action");
  for (double a : last_action) {
    if (a < -1.0 || a > 1.0) throw Error(ErrorKind::InvalidInput, "last_action outside [-1, 1]");
  }
}

std::array<double, kProprioDim> Observation::proprioception() const noexcept {
  std::array<double, kProprioDim> out{};
  std::copy(joint_positions.begin(), joint_positions.end(), out.begin());
  std::copy(joint_velocities.begin(), joint_velocities.end(), out.begin() + kJoints);
  std::copy(last_action.begin(), last_action.end(), out.begin() + 2 * kJoints);
  return out;
}

bool same_content(const Observation& a, const Observation& b) noexcept {
  return a.joint_positions == b.joint_positions && a.joint_velocities == b.joint_velocities &&
         a.last_action == b.last_action && same_frames(a, b);
}

bool same_content(const Transition& a, const Transition& b) noexcept {
  return same_content(a.obs, b.obs) && a.action == b.action && a.reward == b.reward &&
         same_content(a.next_obs, b.next_obs) && a.terminal == b.terminal;
}

MdpSpec MdpSpec::make(double gamma, Millis episode_ms, Millis cycle_ms) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorKind::Configuration, "gamma must lie in [0, 1)");
  }
  MdpSpec spec;
  spec.gamma = gamma;
  spec.horizon_steps = rtsac::horizon_steps(episode_ms, cycle_ms);
  return spec;
}

Action clamp_action(std::span<const double> raw) {
  if (raw.size() != kJoints) {
    throw Error(ErrorKind::InvalidInput,
                "action must have " + std::to_string(kJoints) + " components");
  }
  Action out;
  for (std::size_t i = 0; i < kJoints; ++i) {
    if (!std::isfinite(raw[i])) {
      throw Error(ErrorKind::InvalidInput, "action component " + std::to_string(i) + " is not finite");
    }
    out.joint_velocity_command[i] = std::min(1.0, std::max(-1.0, raw[i]));
  }
  return out;
}

std::int64_t horizon_steps(Millis episode_ms, Millis cycle_ms) {
  if (cycle_ms <= 0) throw Error(ErrorKind::Configuration, "action cycle must be positive");
  if (episode_ms <= 0) throw Error(ErrorKind::Configuration, "episode duration must be positive");
  return episode_ms / cycle_ms;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base ^ (stream * 0x9e3779b97f4a7c15ULL);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::int64_t buffer_init_steps(std::int64_t total_steps) {
  if (total_steps < 0) throw Error(ErrorKind::Configuration, "step count must be non-negative");
  return total_steps * 5000 / 108000;
}

}  // namespace rtsac
