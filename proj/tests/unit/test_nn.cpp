#include <gtest/gtest.h>

#include <cmath>

#include "rtsac/core/error.hpp"
#include "rtsac/nn/network.hpp"
#include "rtsac/nn/optim.hpp"
#include "rtsac/nn/snapshot.hpp"
#include "rtsac/nn/tape.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

namespace rtsac::nn {
namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

TEST(Tape, ElementwiseOpsMatchFiniteDifferences) {
  std::mt19937_64 rng(1);
  ParamSet p;
  p.add("a", {3, 4}, random_matrix(rng, 3, 4));
  p.add("b", {3, 4}, random_matrix(rng, 3, 4));
  p.add("s", {1, 1}, random_matrix(rng, 1, 1));
  auto loss = [](Tape& t, const Bound& b) {
    const auto a = b["a"];
    const auto c = b["b"];
    auto x = t.add(t.mul(t.tanh(a), t.exp(t.scale(c, 0.3))), t.softplus(t.sub(a, c)));
    x = t.add(x, t.square(t.add_scalar(c, -0.2)));
    x = t.min(x, t.relu(t.add_scalar(a, 2.0)));
    x = t.mul_scalar(x, b["s"]);
    return t.mean(t.row_sum(t.clamp(x, -3.0, 3.0)));
  };
  const auto r = testing::check_gradients(p, loss, rng, 12);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(Tape, MatmulBiasConcatSlice) {
  std::mt19937_64 rng(2);
  ParamSet p;
  p.add("x", {5, 3}, random_matrix(rng, 5, 3));
  p.add("w", {6, 4}, random_matrix(rng, 6, 4));
  p.add("bias", {4}, random_matrix(rng, 1, 4));
  auto loss = [](Tape& t, const Bound& b) {
    const auto x = b["x"];
    const auto joined = t.concat_cols({x, t.tanh(x)});
    const auto y = t.add_bias(t.matmul(joined, b["w"]), b["bias"]);
    return t.mean(t.square(t.slice_cols(y, 1, 2)));
  };
  EXPECT_LT(testing::check_gradients(p, loss, rng, 30).max_rel_error, 1e-6);
}

// Direct nested-loop convolution over HWC rows.
Matrix naive_conv(const Matrix& x, const Matrix& w, const Matrix& bias, const ConvGeometry& g) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(g.out_h()) * g.out_w() * g.out_c);
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    for (int oy = 0; oy < g.out_h(); ++oy) {
      for (int ox = 0; ox < g.out_w(); ++ox) {
        for (int oc = 0; oc < g.out_c; ++oc) {
          double s = bias(0, oc);
          for (int ky = 0; ky < g.kernel; ++ky) {
            for (int kx = 0; kx < g.kernel; ++kx) {
              for (int c = 0; c < g.in_c; ++c) {
                const int iy = oy * g.stride + ky;
                const int ix = ox * g.stride + kx;
                s += x(b, (iy * g.in_w + ix) * g.in_c + c) * w((ky * g.kernel + kx) * g.in_c + c, oc);
              }
            }
          }
          out(b, (oy * g.out_w() + ox) * g.out_c + oc) = s;
        }
      }
    }
  }
  return out;
}

TEST(Tape, ConvolutionMatchesNaiveLoops) {
  std::mt19937_64 rng(3);
  for (const ConvGeometry g : {ConvGeometry{7, 9, 2, 3, 2, 3}, ConvGeometry{6, 5, 3, 2, 1, 4}}) {
    const Matrix x = random_matrix(rng, 3, g.in_h * g.in_w * g.in_c);
    const Matrix w = random_matrix(rng, g.patch_size(), g.out_c);
    const Matrix bias = random_matrix(rng, 1, g.out_c);
    Tape t;
    const auto y = t.conv2d(t.constant(x), t.constant(w), t.constant(bias), g);
    EXPECT_LT((t.value(y) - naive_conv(x, w, bias, g)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Tape, ConvolutionGradients) {
  std::mt19937_64 rng(4);
  const ConvGeometry g{7, 8, 2, 3, 2, 3};
  ParamSet p;
  p.add("x", {2, g.in_h * g.in_w * g.in_c}, random_matrix(rng, 2, g.in_h * g.in_w * g.in_c));
  p.add("w", {g.patch_size(), g.out_c}, random_matrix(rng, g.patch_size(), g.out_c));
  p.add("b", {g.out_c}, random_matrix(rng, 1, g.out_c));
  auto loss = [&](Tape& t, const Bound& b) { return t.mean(t.square(t.conv2d(b["x"], b["w"], b["b"], g))); };
  EXPECT_LT(testing::check_gradients(p, loss, rng, 40).max_rel_error, 1e-6);
}

TEST(Tape, BackwardRequiresScalar) {
  Tape t;
  const auto x = t.constant(Matrix::Ones(2, 2));
  try {
    t.backward(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Usage);
  }
}

TEST(Tape, StopGradientBlocksFlow) {
  ParamSet p;
  p.add("a", {1, 1}, Matrix::Constant(1, 1, 2.0));
  Tape t;
  const Bound b(t, p, true);
  const auto a = b["a"];
  t.backward(t.mean(t.mul(a, t.stop_gradient(a))));
  EXPECT_DOUBLE_EQ(t.gradients(p)[0].value(0, 0), 2.0);
}

TEST(Tape, PiecesRecordBranchPerElement) {
  Tape tape;
  tape.record_pieces(true);
  Matrix x(1, 3);
  x << -1.0, 0.0, 2.0;
  Matrix y(1, 3);
  y << 0.0, 0.0, 1.0;
  const auto vx = tape.constant(x);
  tape.relu(vx);
  tape.clamp(vx, -0.5, 1.0);
  tape.min(vx, tape.constant(y));
  const std::vector<bool> want{false, false, true, false, true, true, true, true, false, true, true, false};
  EXPECT_EQ(tape.pieces(), want);

  Tape quiet;
  quiet.relu(quiet.constant(x));
  EXPECT_TRUE(quiet.pieces().empty());
}

TEST(Tape, MinRoutesTiesToFirstArgument) {
  ParamSet p;
  p.add("a", {1, 1}, Matrix::Constant(1, 1, 1.0));
  p.add("b", {1, 1}, Matrix::Constant(1, 1, 1.0));
  Tape t;
  const Bound b(t, p, true);
  t.backward(t.mean(t.min(b["a"], b["b"])));
  const auto g = t.gradients(p);
  EXPECT_DOUBLE_EQ(g[0].value(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g[1].value(0, 0), 0.0);
}

TEST(Network, InitialisationIsFanInUniformAndSeeded) {
  const Architecture arch = testing::tiny_architecture();
  const ParamSet a = init_critic(arch, 5);
  EXPECT_TRUE(a == init_critic(arch, 5));
  EXPECT_FALSE(a == init_critic(arch, 6));
  for (const auto& t : a) {
    const std::string layer = t.name.substr(0, t.name.rfind('.'));
    const double fan_in = static_cast<double>(a.at(layer + ".weight").value.rows());
    EXPECT_LE(t.value.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(fan_in)) << t.name;
  }
  EXPECT_TRUE(a.find("encoder.conv0.weight").has_value());
  EXPECT_TRUE(a.find("q2.fc2.bias").has_value());
  EXPECT_TRUE(init_actor(arch, 1).find("pi.fc2.weight").has_value());
}

TEST(Network, ArchitectureRejectsKernelLargerThanInput) {
  Architecture a = testing::tiny_architecture();
  a.encoder = {{4, 5, 3}, {4, 3, 1}};
  EXPECT_THROW(a.validate(), Error);
}

TEST(Network, ObsBatchInterleavesFramesAndScales) {
  std::mt19937_64 rng(6);
  const Observation obs = testing::random_observation(rng, 2, 3);
  const ObsBatch b = make_obs_batch(obs);
  ASSERT_EQ(b.images.cols(), 2 * 3 * 9);
  for (int p = 0; p < 6; ++p) {
    for (int f = 0; f < 3; ++f) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_DOUBLE_EQ(b.images(0, p * 9 + f * 3 + c), obs.image_stack[f]->rgb[p * 3 + c] / 255.0);
      }
    }
  }
  EXPECT_DOUBLE_EQ(b.proprio(0, 7), obs.joint_velocities[0]);
  EXPECT_DOUBLE_EQ(b.proprio(0, 20), obs.last_action[6]);
}

TEST(Network, ForwardShapesAndLogStdClamp) {
  std::mt19937_64 rng(7);
  Architecture arch = testing::tiny_architecture();
  arch.log_std_min = -0.01;
  arch.log_std_max = 0.01;
  const ParamSet critic = init_critic(arch, 1);
  const ParamSet actor = init_actor(arch, 2);
  std::vector<Observation> obs;
  for (int i = 0; i < 4; ++i) obs.push_back(testing::random_observation(rng, arch.image_h, arch.image_w));
  std::vector<const Observation*> ptrs;
  for (const auto& o : obs) ptrs.push_back(&o);
  const ObsBatch batch = make_obs_batch(ptrs);
  const auto q = forward_critic(critic, arch, batch, Matrix::Zero(4, 7));
  EXPECT_EQ(q.q1.rows(), 4);
  EXPECT_EQ(q.q1.cols(), 1);
  const auto pi = forward_actor(critic, actor, arch, batch);
  EXPECT_EQ(pi.mean.cols(), 7);
  EXPECT_LE(pi.log_std.maxCoeff(), 0.01);
  EXPECT_GE(pi.log_std.minCoeff(), -0.01);
}

TEST(Adam, FirstStepsMatchHandComputation) {
  ParamSet p;
  p.add("w", {2}, (Matrix(1, 2) << 1.0, -2.0).finished());
  ParamSet g = p.zeros_like();
  AdamState s = AdamState::for_params(p);
  const AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  g[0].value << 0.5, -4.0;
  adam_step(p, g, s, cfg);
  // The first bias-corrected step is lr * g / (|g| + eps).
  EXPECT_NEAR(p[0].value(0, 0), 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-12);
  EXPECT_NEAR(p[0].value(0, 1), -2.0 + 0.1 * 4.0 / (4.0 + 1e-8), 1e-12);
  g[0].value << 1.5, 0.0;
  adam_step(p, g, s, cfg);
  const double m = 0.9 * 0.05 + 0.1 * 1.5;
  const double v = 0.999 * 0.00025 + 0.001 * 2.25;
  const double want = (1.0 - 0.1 * 0.5 / (0.5 + 1e-8)) - 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  EXPECT_NEAR(p[0].value(0, 0), want, 1e-12);
  EXPECT_EQ(s.t, 2);
}

TEST(Adam, RejectsNonFiniteWithoutTouchingState) {
  ParamSet p;
  p.add("w", {2}, Matrix::Ones(1, 2));
  ParamSet g = p.zeros_like();
  g[0].value(0, 1) = std::numeric_limits<double>::infinity();
  AdamState s = AdamState::for_params(p);
  const ParamSet before = p;
  try {
    adam_step(p, g, s, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
  EXPECT_TRUE(p == before);
  EXPECT_EQ(s.t, 0);
}

TEST(Polyak, InterpolatesAndValidatesTau) {
  ParamSet target;
  target.add("w", {1}, Matrix::Constant(1, 1, 10.0));
  ParamSet online;
  online.add("w", {1}, Matrix::Constant(1, 1, 0.0));
  polyak_update(target, online, 0.25);
  EXPECT_DOUBLE_EQ(target[0].value(0, 0), 7.5);
  EXPECT_THROW(polyak_update(target, online, 1.5), Error);
}

TEST(Snapshot, RoundTripsAndDetectsCorruption) {
  const ParamSet critic = init_critic(testing::tiny_architecture(), 3);
  const WeightSnapshot snap = encode_snapshot(critic, 9);
  EXPECT_EQ(snap.version, 9u);
  EXPECT_TRUE(snap.checksum_ok());
  EXPECT_TRUE(restore(snap) == critic);

  for (std::size_t pos : {std::size_t{0}, std::size_t{20}, snap.bytes.size() / 2, snap.bytes.size() - 1}) {
    WeightSnapshot bad = snap;
    bad.bytes[pos] ^= 0x40;
    EXPECT_FALSE(bad.checksum_ok());
    try {
      restore(bad);
      FAIL() << "byte " << pos;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Corruption);
    }
  }
  WeightSnapshot truncated = snap;
  truncated.bytes.resize(10);
  EXPECT_THROW(restore(truncated), Error);
}

TEST(Snapshot, GroupsArePrefixedAndVersionsIncrease) {
  const Architecture arch = testing::tiny_architecture();
  const ParamSet critic = init_critic(arch, 1);
  const ParamSet actor = init_actor(arch, 2);
  Snapshotter s;
  const NamedGroup groups[] = {{"critic/", &critic}, {"actor/", &actor}};
  const auto first = s.take(groups);
  const auto second = s.take(groups);
  EXPECT_EQ(first.version, 1u);
  EXPECT_EQ(second.version, 2u);
  const ParamSet all = restore(first);
  EXPECT_TRUE(all.with_prefix_removed("actor/") == actor);
  EXPECT_TRUE(all.with_prefix_removed("critic/") == critic);
}

TEST(ParamSet, RejectsDuplicatesAndShapeMismatch) {
  ParamSet p;
  p.add_zeros("a", {2, 3});
  EXPECT_THROW(p.add_zeros("a", {1}), Error);
  EXPECT_THROW(p.add("b", {2, 3}, Matrix::Zero(3, 2)), Error);
  EXPECT_EQ(p.scalar_count(), 6);
}

}  // namespace
}  // namespace rtsac::nn
