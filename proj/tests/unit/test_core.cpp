#include <gtest/gtest.h>

#include <mutex>
#include <set>

#include "rtsac/core/clock.hpp"
#include "rtsac/core/error.hpp"
#include "rtsac/core/types.hpp"
#include "support/fixtures.hpp"

namespace rtsac {
namespace {

TEST(Types, HorizonStepsFloorsTheRatio) {
  EXPECT_EQ(horizon_steps(6000, 40), 150);
  EXPECT_EQ(horizon_steps(6000, 75), 80);
  EXPECT_EQ(horizon_steps(6000, 80), 75);
  EXPECT_EQ(horizon_steps(6000, 120), 50);
  EXPECT_EQ(horizon_steps(6000, 7000), 0);
}

TEST(Types, BufferInitKeepsTheWarmupRatio) {
  EXPECT_EQ(buffer_init_steps(108000), 5000);
  EXPECT_EQ(buffer_init_steps(57600), 2666);
  EXPECT_EQ(buffer_init_steps(54000), 2500);
  EXPECT_EQ(buffer_init_steps(0), 0);
}

TEST(Types, ClampActionSaturatesAndRejectsNonFinite) {
  const std::array<double, kJoints> raw{-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 7.0};
  const Action a = clamp_action(raw);
  const JointVector want{-1.0, -1.0, -0.5, 0.0, 0.5, 1.0, 1.0};
  EXPECT_EQ(a.joint_velocity_command, want);

  std::array<double, kJoints> bad{};
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    clamp_action(bad);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
  const std::array<double, 3> short_vec{};
  EXPECT_THROW(clamp_action(short_vec), Error);
}

TEST(Types, DeriveSeedSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base = 0; base < 50; ++base) {
    for (std::uint64_t stream = 0; stream < 20; ++stream) seen.insert(derive_seed(base, stream));
  }
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Types, ObservationValidation) {
  std::mt19937_64 rng(1);
  Observation obs = testing::random_observation(rng, 4, 5);
  EXPECT_NO_THROW(obs.validate());
  Observation missing = obs;
  missing.image_stack[1].reset();
  EXPECT_THROW(missing.validate(), Error);
  Observation mismatched = obs;
  mismatched.image_stack[2] = testing::random_image(rng, 4, 6);
  EXPECT_THROW(mismatched.validate(), Error);
  Observation out_of_range = obs;
  out_of_range.last_action[0] = 1.5;
  EXPECT_THROW(out_of_range.validate(), Error);
}

TEST(Types, MdpSpecRejectsBadDiscount) {
  EXPECT_EQ(MdpSpec::make(0.99, 6000, 75).horizon_steps, 80);
  EXPECT_THROW(MdpSpec::make(1.0, 6000, 40), Error);
  EXPECT_THROW(MdpSpec::make(-0.1, 6000, 40), Error);
}

TEST(VirtualClock, AdvancesOutsideWorkersWithoutBlocking) {
  VirtualClock clock;
  EXPECT_EQ(clock.now(), 0);
  clock.sleep_for(25);
  EXPECT_EQ(clock.now(), 25);
  EXPECT_FALSE(clock.try_sleep_until(10));
  EXPECT_THROW(clock.sleep_until(10), Error);
}

TEST(VirtualClock, InterleavesWorkersByTimeThenId) {
  VirtualClock clock;
  std::vector<std::pair<Millis, int>> trace;
  auto worker = [&](int id, Millis period, int count) {
    return [&, id, period, count] {
      for (int i = 0; i < count; ++i) {
        trace.emplace_back(clock.now(), id);
        clock.sleep_for(period);
      }
    };
  };
  clock.run({worker(0, 30, 3), worker(1, 20, 4), worker(2, 60, 2)});
  const std::vector<std::pair<Millis, int>> want{{0, 0},  {0, 1},  {0, 2},  {20, 1}, {30, 0},
                                                 {40, 1}, {60, 0}, {60, 1}, {60, 2}};
  EXPECT_EQ(trace, want);
  EXPECT_EQ(clock.now(), 120);
}

TEST(VirtualClock, EventLogRecordsEveryDispatch) {
  VirtualClock clock;
  clock.run({[&] { clock.sleep_for(5); }, [&] { clock.sleep_for(5); }});
  const std::vector<VirtualClock::Event> want{{0, 0}, {0, 1}, {5, 0}, {5, 1}};
  EXPECT_EQ(clock.event_log(), want);
  EXPECT_EQ(clock.event_log_text(), "0 0\n0 1\n5 0\n5 1\n");
}

TEST(VirtualClock, RepeatedRunsProduceIdenticalLogs) {
  auto once = [] {
    VirtualClock clock;
    std::mutex m;
    Gate gate;
    int produced = 0;
    clock.run({[&] {
                 for (int i = 0; i < 20; ++i) {
                   clock.sleep_for(7);
                   std::lock_guard lock(m);
                   ++produced;
                   clock.notify_all(gate);
                 }
               },
               [&] {
                 int seen = 0;
                 while (seen < 20) {
                   std::unique_lock lock(m);
                   while (produced == seen) clock.wait(gate, lock);
                   seen = produced;
                   lock.unlock();
                   clock.sleep_for(3);
                 }
               }});
    return clock.event_log_text();
  };
  const std::string first = once();
  for (int i = 0; i < 5; ++i) EXPECT_EQ(once(), first);
}

TEST(VirtualClock, WaitResumesAtNotifierTime) {
  VirtualClock clock;
  std::mutex m;
  Gate gate;
  bool ready = false;
  Millis woke = -1;
  clock.run({[&] {
               std::unique_lock lock(m);
               while (!ready) clock.wait(gate, lock);
               woke = clock.now();
             },
             [&] {
               clock.sleep_for(42);
               std::lock_guard lock(m);
               ready = true;
               clock.notify_all(gate);
             }});
  EXPECT_EQ(woke, 42);
}

TEST(VirtualClock, DetectsDeadlock) {
  VirtualClock clock;
  std::mutex m;
  Gate gate;
  try {
    clock.run({[&] {
      std::unique_lock lock(m);
      clock.wait(gate, lock);
    }});
    FAIL() << "expected a deadlock error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Scheduling);
  }
}

TEST(VirtualClock, StopWakesSleepersEarly) {
  VirtualClock clock;
  Millis woke = -1;
  clock.run({[&] {
               clock.sleep_for(1'000'000);
               woke = clock.now();
             },
             [&] {
               clock.sleep_for(10);
               clock.request_stop();
             }});
  EXPECT_EQ(woke, 10);
  EXPECT_TRUE(clock.stop_requested());
}

TEST(VirtualClock, WorkerExceptionPropagates) {
  VirtualClock clock;
  EXPECT_THROW(clock.run({[] { throw Error(ErrorKind::Runtime, "boom"); }}), Error);
}

TEST(VirtualClock, SleepingIntoThePastFailsInsideWorker) {
  VirtualClock clock;
  bool ok = true;
  clock.run({[&] {
    clock.sleep_for(10);
    ok = clock.try_sleep_until(5);
  }});
  EXPECT_FALSE(ok);
}

TEST(RealClock, SleepsForWallTime) {
  RealClock clock;
  const double start = clock.now_precise();
  clock.run({[&] { clock.sleep_for(20); }});
  EXPECT_GE(clock.now_precise() - start, 19.0);
}

}  // namespace
}  // namespace rtsac
