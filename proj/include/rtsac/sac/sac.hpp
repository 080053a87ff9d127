#pragma once

#include <cstdint>
#include <memory>
#include <random>

#include "rtsac/core/types.hpp"
#include "rtsac/nn/network.hpp"
#include "rtsac/nn/optim.hpp"
#include "rtsac/nn/snapshot.hpp"
#include "rtsac/sac/replay_buffer.hpp"

namespace rtsac::sac {

struct SacHyper {
  double gamma = 0.99;
  double tau = 0.005;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_alpha = 3e-4;
  std::size_t batch_size = 128;
  double target_entropy = -static_cast<double>(kJoints);
  double init_alpha = 0.1;

  void validate() const;
};

using nn::Matrix;
using nn::Tape;

// Minibatch converted to network inputs.
struct PreparedBatch {
  nn::ObsBatch obs;
  nn::ObsBatch next_obs;
  Matrix actions;  // B x 7
  Matrix rewards;  // B x 1
};

PreparedBatch prepare(const Batch& batch);

// Reparameterised tanh-Gaussian sample a = tanh(mean + exp(log_std) * noise)
// with its log-density under the squashed distribution (B x 1).
struct PolicySample {
  Tape::Var action;
  Tape::Var log_prob;
};
PolicySample sample_policy(Tape& tape, const nn::ActorOutput& head, const Matrix& noise);

// --- objectives on precomputed quantities ---------------------------------

// r + gamma * V. The terminal flag never zeroes the bootstrap.
Matrix td_target(const Matrix& rewards, const Matrix& soft_values, double gamma);
// mean(1/2 (q1 - y)^2) + mean(1/2 (q2 - y)^2)
Tape::Var critic_objective(Tape& tape, Tape::Var q1, Tape::Var q2, const Matrix& target);
// mean(alpha * log_pi - min(q1, q2))
Tape::Var actor_objective(Tape& tape, Tape::Var log_prob, Tape::Var q1, Tape::Var q2, double alpha);
// mean(-log_alpha * (log_pi + target_entropy))
Tape::Var temperature_objective(Tape& tape, Tape::Var log_alpha, const Matrix& log_prob, double target_entropy);

// --- network-level losses --------------------------------------------------

struct Networks {
  nn::Architecture arch;
  nn::ParamSet critic;
  nn::ParamSet critic_target;
  nn::ParamSet actor;
  nn::ParamSet temperature;  // single 1x1 tensor "log_alpha"

  double alpha() const;
};

Networks make_networks(const nn::Architecture& arch, double init_alpha, std::uint64_t seed);

// min(Q1', Q2')(s', a') - alpha * log pi(a'|s') with a' ~ pi(.|s'). Evaluated
// without gradients; the actor reads the online encoder, the critics use the
// target parameters.
Matrix soft_value(const nn::ParamSet& target_critic, const nn::ParamSet& critic, const nn::ParamSet& actor,
                  const nn::Architecture& arch, const nn::ObsBatch& next_obs, double alpha, const Matrix& noise);

// Critic parameters bound on `tape` by the caller (trainable or not).
Tape::Var critic_loss(Tape& tape, const nn::Bound& critic, const nn::Architecture& arch, const PreparedBatch& batch,
                      const Matrix& target);

struct ActorLoss {
  Tape::Var loss;
  Matrix log_prob;
};
// The encoder output is detached; the critic heads are constants, so the
// gradient reaches the actor through the sampled action only.
ActorLoss actor_loss(Tape& tape, const nn::ParamSet& critic, const nn::Bound& actor, const nn::Architecture& arch,
                     const nn::ObsBatch& obs, const Matrix& noise, double alpha);

// --- learner / policy interfaces used by the pipeline ----------------------

enum class ActMode { Stochastic, Mean };

struct UpdateMetrics {
  std::uint64_t update_index = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual void load(const nn::WeightSnapshot& snapshot) = 0;
  virtual Action act(const Observation& obs, ActMode mode) = 0;
};

class Learner {
 public:
  virtual ~Learner() = default;
  // One gradient update. Counter increments only on success.
  virtual UpdateMetrics update(const Batch& batch) = 0;
  virtual std::uint64_t update_count() const noexcept = 0;
  // Snapshot of the current parameters with the next version number.
  virtual nn::WeightSnapshot publish() = 0;
  virtual std::unique_ptr<Policy> make_policy(std::uint64_t seed) const = 0;
  // Action from the current online parameters (synchronous loop).
  virtual Action act(const Observation& obs, ActMode mode) = 0;
};

class SacPolicy final : public Policy {
 public:
  SacPolicy(nn::Architecture arch, std::uint64_t seed);
  void load(const nn::WeightSnapshot& snapshot) override;
  Action act(const Observation& obs, ActMode mode) override;
  // Acting directly from parameter sets (no snapshot round trip).
  Action act_with(const nn::ParamSet& critic, const nn::ParamSet& actor, const Observation& obs, ActMode mode);
  bool loaded() const noexcept { return !actor_.empty(); }

 private:
  nn::Architecture arch_;
  nn::ParamSet encoder_;
  nn::ParamSet actor_;
  std::mt19937_64 rng_;
};

// act(policy_snapshot, obs, mode)
Action act(const nn::WeightSnapshot& policy_snapshot, const nn::Architecture& arch, const Observation& obs,
           ActMode mode, std::uint64_t seed);

class SacLearner final : public Learner {
 public:
  SacLearner(nn::Architecture arch, SacHyper hyper, std::uint64_t seed);

  UpdateMetrics update(const Batch& batch) override;
  std::uint64_t update_count() const noexcept override { return updates_; }
  nn::WeightSnapshot publish() override;
  std::unique_ptr<Policy> make_policy(std::uint64_t seed) const override;
  Action act(const Observation& obs, ActMode mode) override;

  const Networks& networks() const noexcept { return nets_; }
  Networks& networks() noexcept { return nets_; }
  const SacHyper& hyper() const noexcept { return hyper_; }

 private:
  nn::Architecture arch_;
  SacHyper hyper_;
  Networks nets_;
  nn::AdamState critic_opt_;
  nn::AdamState actor_opt_;
  nn::AdamState alpha_opt_;
  nn::Snapshotter snapshots_;
  std::mt19937_64 noise_rng_;
  SacPolicy actor_;
  std::uint64_t updates_ = 0;
};

// Uniform random actions; updates are counted but change nothing. Used for
// the random-policy baseline and for timing-only runs.
class RandomLearner final : public Learner {
 public:
  explicit RandomLearner(std::uint64_t seed) : rng_(seed) {}
  UpdateMetrics update(const Batch& batch) override;
  std::uint64_t update_count() const noexcept override { return updates_; }
  nn::WeightSnapshot publish() override;
  std::unique_ptr<Policy> make_policy(std::uint64_t seed) const override;
  Action act(const Observation& obs, ActMode mode) override;

 private:
  std::mt19937_64 rng_;
  nn::Snapshotter snapshots_;
  nn::ParamSet empty_;
  std::uint64_t updates_ = 0;
};

Matrix gaussian_noise(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);
Action uniform_action(std::mt19937_64& rng);

}  // namespace rtsac::sac
