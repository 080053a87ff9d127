#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "rtsac/core/clock.hpp"
#include "rtsac/core/error.hpp"
#include "rtsac/envsim/envsim.hpp"
#include "support/fixtures.hpp"
#include "support/reward_oracle.hpp"

namespace rtsac::envsim {
namespace {

using testing::brute_force_reward;
using testing::solid;

TEST(Reward, MatchesBruteForceOnRandomImages) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> byte(0, 255);
  std::bernoulli_distribution red(0.3);
  for (const auto& [h, w, dt] : {std::tuple{24, 40, 40.0}, std::tuple{48, 80, 75.0}, std::tuple{90, 160, 80.0}}) {
    for (int trial = 0; trial < 50; ++trial) {
      Image img(h, w);
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
          auto* p = img.pixel(i, j);
          if (red(rng)) {
            p[0] = static_cast<std::uint8_t>(200 + byte(rng) % 56);
            p[1] = static_cast<std::uint8_t>(byte(rng) % 90);
            p[2] = static_cast<std::uint8_t>(byte(rng) % 90);
          } else {
            p[0] = static_cast<std::uint8_t>(byte(rng));
            p[1] = static_cast<std::uint8_t>(byte(rng));
            p[2] = static_cast<std::uint8_t>(byte(rng));
          }
        }
      }
      const double got = compute_reward(compute_mask(img, h, w), RewardParams{0.25, dt, h, w});
      EXPECT_NEAR(got, brute_force_reward(img, RedThreshold{}, 0.25, dt), 1e-12);
    }
  }
}

TEST(Reward, BoundsAttainedOnSolidFrames) {
  for (const auto& [dt, want] : {std::pair{40.0, 10.0}, std::pair{75.0, 18.75}, std::pair{80.0, 20.0}}) {
    const RewardParams params{0.25, dt, 24, 40};
    EXPECT_DOUBLE_EQ(compute_reward(compute_mask(solid(24, 40, 255, 0, 0), 24, 40), params), want);
    EXPECT_DOUBLE_EQ(compute_reward(compute_mask(solid(24, 40, 0, 0, 0), 24, 40), params), 0.0);
  }
}

TEST(Reward, KOnesScaleLinearly) {
  Mask mask{90, 160, std::vector<std::uint8_t>(90 * 160, 0)};
  for (int k : {1, 17, 1000, 14400}) {
    std::fill(mask.bits.begin(), mask.bits.end(), 0);
    std::fill(mask.bits.begin(), mask.bits.begin() + k, 1);
    EXPECT_NEAR(compute_reward(mask, RewardParams{0.25, 75.0, 90, 160}), 0.25 * 75.0 * k / 14400.0, 1e-12);
  }
}

TEST(Mask, ThresholdBoundariesAreInclusive) {
  EXPECT_EQ(compute_mask(solid(2, 2, 200, 80, 80), 2, 2).count(), 4u);
  EXPECT_EQ(compute_mask(solid(2, 2, 199, 80, 80), 2, 2).count(), 0u);
  EXPECT_EQ(compute_mask(solid(2, 2, 255, 81, 0), 2, 2).count(), 0u);
  EXPECT_EQ(compute_mask(solid(2, 2, 255, 0, 81), 2, 2).count(), 0u);
}

TEST(Mask, RejectsWrongDimensions) {
  try {
    compute_mask(solid(3, 4, 0, 0, 0), 4, 3);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Configuration);
  }
  const Mask m{3, 4, std::vector<std::uint8_t>(12, 0)};
  EXPECT_THROW(compute_reward(m, RewardParams{0.25, 40.0, 4, 3}), Error);
}

// Pinhole model rebuilt from vectors: the ray camera->target meets the image
// plane one focal length below the camera.
struct Projection {
  double row;
  double col;
  double radius;
};
Projection oracle_projection(const Vec3& cam, const Vec3& target, double radius_cm, const Camera& camera) {
  const double ray[3] = {target[0] - cam[0], target[1] - cam[1], target[2] - cam[2]};
  const double t = camera.focal_px / -ray[2];
  const double len = std::sqrt(ray[0] * ray[0] + ray[1] * ray[1] + ray[2] * ray[2]);
  return {camera.height / 2.0 + ray[0] * t, camera.width / 2.0 + ray[1] * t, camera.focal_px * radius_cm / len};
}

TEST(Render, MatchesPinholeOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.0, 40.0), uy(0.0, 60.0), uz(1.0, 30.0);
  const Camera camera{1.25 * 48, 48, 80};
  for (int trial = 0; trial < 200; ++trial) {
    ArmState arm;
    arm.camera_position = {ux(rng), uy(rng), uz(rng)};
    TargetSpec target;
    target.position = {ux(rng), uy(rng), -5.0};
    target.radius_cm = 3.0;
    const Image img = render(arm, target, camera);
    const Projection p = oracle_projection(arm.camera_position, target.position, 3.0, camera);
    for (int i = 0; i < camera.height; ++i) {
      for (int j = 0; j < camera.width; ++j) {
        const double di = i + 0.5 - p.row;
        const double dj = j + 0.5 - p.col;
        const double d2 = di * di + dj * dj;
        const double r2 = p.radius * p.radius;
        if (std::abs(d2 - r2) < 1e-9 * (1.0 + r2)) continue;
        const bool want = d2 < r2;
        const auto* px = img.pixel(i, j);
        const bool red = px[0] == 255 && px[1] == 0 && px[2] == 0;
        ASSERT_EQ(red, want) << "trial " << trial << " pixel " << i << "," << j;
        if (!red) {
          ASSERT_EQ(px[0], kBackground[0]);
        }
      }
    }
  }
}

TEST(Render, DiscAreaApproachesPiRSquared) {
  const Camera camera{1.25 * 180, 180, 320};
  ArmState arm;
  arm.camera_position = {20.0, 30.0, 15.0};
  TargetSpec target;
  target.position = {20.0, 30.0, -5.0};
  const Image img = render(arm, target, camera);
  const double r = camera.focal_px * 3.0 / 20.0;
  const double area = static_cast<double>(compute_mask(img, 180, 320).count());
  EXPECT_NEAR(area / (std::numbers::pi * r * r), 1.0, 0.01);
}

TEST(Render, CloserCameraSeesMoreRed) {
  const Camera camera{1.25 * 24, 24, 40};
  TargetSpec target;
  target.position = {20.0, 30.0, -5.0};
  std::size_t previous = 0;
  for (double z : {30.0, 20.0, 10.0, 5.0, 1.0}) {
    ArmState arm;
    arm.camera_position = {20.0, 30.0, z};
    const std::size_t n = compute_mask(render(arm, target, camera), 24, 40).count();
    EXPECT_GE(n, previous);
    previous = n;
  }
  EXPECT_GT(previous, 0u);
}

TEST(SimEnv, StepMovesCameraByKinematicMap) {
  VirtualClock clock;
  SimEnv env(testing::small_env(40), 3, clock);
  env.reset();
  Action a;
  a.joint_velocity_command = {1.0, 0.5, -1.0, 0.25, 0.0, 1.0, -0.5};
  const Vec3 before = env.arm().camera_position;
  env.step(a);
  const auto K = EnvConfig::default_kinematics();
  for (std::size_t axis = 0; axis < 3; ++axis) {
    double v = 0.0;
    for (std::size_t j = 0; j < kJoints; ++j) v += K[axis][j] * a.joint_velocity_command[j];
    const double want = std::clamp(before[axis] + 10.0 * v * 0.04, 0.0, kBoxMax[axis]);
    EXPECT_NEAR(env.arm().camera_position[axis], want, 1e-12);
  }
}

TEST(SimEnv, CameraStaysInsideBox) {
  VirtualClock clock;
  SimEnv env(testing::small_env(40), 4, clock);
  env.reset();
  Action up;
  up.joint_velocity_command.fill(1.0);
  for (int i = 0; i < 150; ++i) env.step(up);
  const Vec3 c = env.arm().camera_position;
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GE(c[i], 0.0);
    EXPECT_LE(c[i], kBoxMax[i]);
  }
}

TEST(SimEnv, EpisodeLengthAndStacking) {
  VirtualClock clock;
  SimEnv env(testing::small_env(75), 9, clock);
  Observation obs = env.reset();
  EXPECT_EQ(obs.image_stack[0], obs.image_stack[2]);
  EXPECT_EQ(env.horizon(), 80);
  Action zero;
  FramePtr newest = obs.image_stack[2];
  for (int i = 1; i <= 80; ++i) {
    const StepResult r = env.step(zero);
    EXPECT_EQ(r.observation.image_stack[1], newest);
    newest = r.observation.image_stack[2];
    EXPECT_EQ(r.episode_done, i == 80);
    EXPECT_GE(r.reward, 0.0);
    EXPECT_LE(r.reward, 0.25 * 75.0);
  }
  try {
    env.step(zero);
    FAIL() << "expected EpisodeOver";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EpisodeOver);
  }
}

TEST(SimEnv, ResetSpendsResetTimeAndEnvironmentDoesNotAdvanceClockOnStep) {
  VirtualClock clock;
  SimEnv env(testing::small_env(40), 1, clock);
  env.reset();
  EXPECT_EQ(clock.now(), 4000);
  env.step(Action{});
  EXPECT_EQ(clock.now(), 4000);
}

TEST(SimEnv, TargetPlacementWithinRegion) {
  VirtualClock clock;
  SimEnv env(testing::small_env(40), 21, clock);
  for (int i = 0; i < 100; ++i) {
    env.reset();
    const auto& p = env.target().position;
    EXPECT_GE(p[0], 10.0);
    EXPECT_LE(p[0], 30.0);
    EXPECT_GE(p[1], 12.0);
    EXPECT_LE(p[1], 48.0);
  }
}

TEST(SimEnv, SameSeedSameTrajectory) {
  auto rollout = [](std::uint64_t seed) {
    VirtualClock clock;
    SimEnv env(testing::small_env(40), seed, clock);
    env.reset();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> rewards;
    for (int i = 0; i < 150; ++i) {
      Action a;
      for (auto& x : a.joint_velocity_command) x = u(rng);
      rewards.push_back(env.step(a).reward);
    }
    return rewards;
  };
  EXPECT_EQ(rollout(8), rollout(8));
  EXPECT_NE(rollout(8), rollout(9));
}

TEST(SimEnv, ReachingTheTargetRaisesReward) {
  VirtualClock clock;
  SimEnv env(testing::small_env(40), 2, clock);
  env.reset();
  const double start = env.step(Action{}).reward;
  // Drive the camera straight towards the point above the target and down.
  double best = start;
  for (int i = 1; i < 150; ++i) {
    const Vec3 c = env.arm().camera_position;
    const Vec3& t = env.target().position;
    const double want[3] = {t[0] - c[0], t[1] - c[1], 2.0 - c[2]};
    // Invert the block-structured default map axis by axis.
    Action a;
    a.joint_velocity_command[0] = std::clamp(want[0], -1.0, 1.0);
    a.joint_velocity_command[1] = std::clamp(want[1], -1.0, 1.0);
    a.joint_velocity_command[2] = std::clamp(want[2], -1.0, 1.0);
    a.joint_velocity_command[5] = std::clamp(want[2], -1.0, 1.0);
    best = std::max(best, env.step(a).reward);
  }
  EXPECT_GT(best, start + 1.0);
}

TEST(EnvConfig, RejectsRankDeficientKinematics) {
  EnvConfig c;
  c.kinematics[2] = c.kinematics[0];
  EXPECT_THROW(c.validate(), Error);
  EnvConfig ok;
  EXPECT_NO_THROW(ok.validate());
}

TEST(Ppm, HeaderAndPayload) {
  testing::TempDir dir("ppm");
  Image img = solid(2, 3, 1, 2, 3);
  const auto bytes = encode_ppm(img);
  const std::string header = "P6\n3 2\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 18);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + static_cast<long>(header.size())), header);
  write_ppm(img, dir.path() / "x.ppm");
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "x.ppm"), bytes.size());
}

}  // namespace
}  // namespace rtsac::envsim
