#include "rtsac/sac/sac.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "rtsac/core/error.hpp"

namespace rtsac::sac {

namespace {

using nn::Bound;
using nn::ParamSet;

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::Configuration, std::string("sac: ") + what);
}

ParamSet encoder_only(const ParamSet& critic) {
  ParamSet out;
  for (const auto& t : critic) {
    if (t.name.rfind("encoder.", 0) == 0) out.add(t.name, t.shape, t.value);
  }
  return out;
}

Matrix state_matrix(const ParamSet& critic, const nn::Architecture& arch, const nn::ObsBatch& obs) {
  Tape tape;
  const Bound c(tape, critic, false);
  const auto features = nn::encode(tape, c, arch, tape.constant(obs.images));
  return tape.value(tape.concat_cols({features, tape.constant(obs.proprio)}));
}

// Actor loss from a precomputed (detached) state matrix.
ActorLoss actor_loss_from_state(Tape& tape, const ParamSet& critic, const Bound& actor, const nn::Architecture& arch,
                                const Matrix& state_value, const Matrix& noise, double alpha) {
  const Tape::Var state = tape.constant(state_value);
  const auto head = nn::actor_head(tape, actor, arch, state);
  const auto sample = sample_policy(tape, head, noise);
  const Bound c(tape, critic, false);
  const auto q = nn::critic_heads(tape, c, arch, state, sample.action);
  return {actor_objective(tape, sample.log_prob, q.q1, q.q2, alpha), tape.value(sample.log_prob)};
}

std::int64_t first_non_finite_row(const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!m.row(r).allFinite()) return r;
  }
  return -1;
}

}  // namespace

void SacHyper::validate() const {
  check(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  check(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  check(lr_actor > 0.0 && lr_critic > 0.0 && lr_alpha > 0.0, "learning rates must be positive");
  check(batch_size >= 1, "batch size must be at least 1");
  check(init_alpha > 0.0 && std::isfinite(init_alpha), "initial temperature must be positive");
  check(std::isfinite(target_entropy), "target entropy must be finite");
}

PreparedBatch prepare(const Batch& batch) {
  if (batch.empty()) throw Error(ErrorKind::Usage, "empty batch");
  std::vector<const Observation*> obs;
  std::vector<const Observation*> next;
  std::vector<const Action*> actions;
  obs.reserve(batch.size());
  next.reserve(batch.size());
  actions.reserve(batch.size());
  Matrix rewards(static_cast<Eigen::Index>(batch.size()), 1);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    obs.push_back(&batch[i].obs);
    next.push_back(&batch[i].next_obs);
    actions.push_back(&batch[i].action);
    rewards(static_cast<Eigen::Index>(i), 0) = batch[i].reward;
  }
  return {nn::make_obs_batch(obs), nn::make_obs_batch(next), nn::make_action_batch(actions), std::move(rewards)};
}

PolicySample sample_policy(Tape& tape, const nn::ActorOutput& head, const Matrix& noise) {
  const Matrix& mean = tape.value(head.mean);
  if (noise.rows() != mean.rows() || noise.cols() != mean.cols()) {
    throw Error(ErrorKind::Configuration, "policy noise shape mismatch");
  }
  const Tape::Var eps = tape.constant(noise);
  const Tape::Var u = tape.add(head.mean, tape.mul(tape.exp(head.log_std), eps));
  const Tape::Var action = tape.tanh(u);

  // Gaussian log-density of u: sum(-eps^2/2 - log_std) - k/2 log(2 pi).
  const double k = static_cast<double>(noise.cols());
  Matrix gauss_const = (-0.5 * noise.array().square()).rowwise().sum().matrix();
  gauss_const.array() -= 0.5 * k * std::log(2.0 * std::numbers::pi);
  const Tape::Var gauss = tape.add(tape.constant(std::move(gauss_const)), tape.scale(tape.row_sum(head.log_std), -1.0));

  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
  const Tape::Var inner = tape.add_scalar(
      tape.scale(tape.add(u, tape.softplus(tape.scale(u, -2.0))), -1.0), std::numbers::ln2);
  const Tape::Var correction = tape.scale(tape.row_sum(inner), 2.0);
  return {action, tape.sub(gauss, correction)};
}

Matrix td_target(const Matrix& rewards, const Matrix& soft_values, double gamma) {
  if (rewards.rows() != soft_values.rows() || rewards.cols() != soft_values.cols()) {
    throw Error(ErrorKind::Configuration, "td_target: shape mismatch");
  }
  return rewards + gamma * soft_values;
}

Tape::Var critic_objective(Tape& tape, Tape::Var q1, Tape::Var q2, const Matrix& target) {
  if (tape.value(q1).rows() == 0) throw Error(ErrorKind::Usage, "critic loss of an empty batch");
  const Tape::Var y = tape.constant(target);
  const Tape::Var l1 = tape.mean(tape.scale(tape.square(tape.sub(q1, y)), 0.5));
  const Tape::Var l2 = tape.mean(tape.scale(tape.square(tape.sub(q2, y)), 0.5));
  return tape.add(l1, l2);
}

Tape::Var actor_objective(Tape& tape, Tape::Var log_prob, Tape::Var q1, Tape::Var q2, double alpha) {
  if (tape.value(log_prob).rows() == 0) throw Error(ErrorKind::Usage, "actor loss of an empty batch");
  return tape.mean(tape.sub(tape.scale(log_prob, alpha), tape.min(q1, q2)));
}

Tape::Var temperature_objective(Tape& tape, Tape::Var log_alpha, const Matrix& log_prob, double target_entropy) {
  if (log_prob.rows() == 0) throw Error(ErrorKind::Usage, "temperature loss of an empty batch");
  Matrix shifted = log_prob.array() + target_entropy;
  return tape.mean(tape.scale(tape.mul_scalar(tape.constant(std::move(shifted)), log_alpha), -1.0));
}

double Networks::alpha() const { return std::exp(temperature.at("log_alpha").value(0, 0)); }

Networks make_networks(const nn::Architecture& arch, double init_alpha, std::uint64_t seed) {
  Networks nets;
  nets.arch = arch;
  nets.critic = nn::init_critic(arch, derive_seed(seed, 1));
  nets.critic_target = nets.critic;
  nets.actor = nn::init_actor(arch, derive_seed(seed, 2));
  Matrix la(1, 1);
  la(0, 0) = std::log(init_alpha);
  nets.temperature.add("log_alpha", {1}, la);
  return nets;
}

Matrix soft_value(const ParamSet& target_critic, const ParamSet& critic, const ParamSet& actor,
                  const nn::Architecture& arch, const nn::ObsBatch& next_obs, double alpha, const Matrix& noise) {
  Tape tape;
  const Bound online(tape, critic, false);
  const Bound target(tape, target_critic, false);
  const Bound pi(tape, actor, false);
  const auto images = tape.constant(next_obs.images);
  const auto proprio = tape.constant(next_obs.proprio);
  const auto policy_state = tape.concat_cols({nn::encode(tape, online, arch, images), proprio});
  const auto sample = sample_policy(tape, nn::actor_head(tape, pi, arch, policy_state), noise);
  const auto target_state = tape.concat_cols({nn::encode(tape, target, arch, images), proprio});
  const auto q = nn::critic_heads(tape, target, arch, target_state, sample.action);
  return tape.value(q.q1).cwiseMin(tape.value(q.q2)) - alpha * tape.value(sample.log_prob);
}

Tape::Var critic_loss(Tape& tape, const Bound& critic, const nn::Architecture& arch, const PreparedBatch& batch,
                      const Matrix& target) {
  const auto features = nn::encode(tape, critic, arch, tape.constant(batch.obs.images));
  const auto state = tape.concat_cols({features, tape.constant(batch.obs.proprio)});
  const auto q = nn::critic_heads(tape, critic, arch, state, tape.constant(batch.actions));
  return critic_objective(tape, q.q1, q.q2, target);
}

ActorLoss actor_loss(Tape& tape, const ParamSet& critic, const Bound& actor, const nn::Architecture& arch,
                     const nn::ObsBatch& obs, const Matrix& noise, double alpha) {
  return actor_loss_from_state(tape, critic, actor, arch, state_matrix(critic, arch, obs), noise, alpha);
}

Matrix gaussian_noise(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Action uniform_action(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Action a;
  for (auto& c : a.joint_velocity_command) c = u(rng);
  return a;
}

// --- SacPolicy -------------------------------------------------------------

SacPolicy::SacPolicy(nn::Architecture arch, std::uint64_t seed) : arch_(std::move(arch)), rng_(seed) {}

void SacPolicy::load(const nn::WeightSnapshot& snapshot) {
  const ParamSet all = nn::restore(snapshot);
  encoder_ = encoder_only(all.with_prefix_removed("critic/"));
  actor_ = all.with_prefix_removed("actor/");
  if (actor_.empty()) throw Error(ErrorKind::Configuration, "snapshot carries no actor parameters");
}

Action SacPolicy::act_with(const ParamSet& critic, const ParamSet& actor, const Observation& obs, ActMode mode) {
  const auto out = nn::forward_actor(critic, actor, arch_, nn::make_obs_batch(obs));
  std::array<double, kJoints> raw{};
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t j = 0; j < kJoints; ++j) {
    double u = out.mean(0, static_cast<Eigen::Index>(j));
    if (mode == ActMode::Stochastic) u += std::exp(out.log_std(0, static_cast<Eigen::Index>(j))) * n(rng_);
    raw[j] = std::tanh(u);
  }
  return clamp_action(raw);
}

Action SacPolicy::act(const Observation& obs, ActMode mode) {
  if (!loaded()) throw Error(ErrorKind::Usage, "policy has no weights loaded");
  return act_with(encoder_, actor_, obs, mode);
}

Action act(const nn::WeightSnapshot& policy_snapshot, const nn::Architecture& arch, const Observation& obs,
           ActMode mode, std::uint64_t seed) {
  SacPolicy policy(arch, seed);
  policy.load(policy_snapshot);
  return policy.act(obs, mode);
}

// --- SacLearner ------------------------------------------------------------

SacLearner::SacLearner(nn::Architecture arch, SacHyper hyper, std::uint64_t seed)
    : arch_(std::move(arch)),
      hyper_(hyper),
      nets_(make_networks(arch_, hyper.init_alpha, seed)),
      critic_opt_(nn::AdamState::for_params(nets_.critic)),
      actor_opt_(nn::AdamState::for_params(nets_.actor)),
      alpha_opt_(nn::AdamState::for_params(nets_.temperature)),
      noise_rng_(derive_seed(seed, 3)),
      actor_(arch_, derive_seed(seed, 4)) {
  hyper_.validate();
}

UpdateMetrics SacLearner::update(const Batch& batch) {
  const PreparedBatch prep = prepare(batch);
  const auto rows = static_cast<Eigen::Index>(batch.size());
  const auto cols = static_cast<Eigen::Index>(arch_.action_dim);
  const double alpha = nets_.alpha();
  const Matrix next_noise = gaussian_noise(noise_rng_, rows, cols);
  const Matrix noise = gaussian_noise(noise_rng_, rows, cols);
  const std::string where = "update " + std::to_string(updates_ + 1) + ": ";

  const Matrix target = td_target(
      prep.rewards, soft_value(nets_.critic_target, nets_.critic, nets_.actor, arch_, prep.next_obs, alpha, next_noise),
      hyper_.gamma);
  if (const auto bad = first_non_finite_row(target); bad >= 0) {
    throw Error(ErrorKind::NonFinite, where + "non-finite critic target at batch index " + std::to_string(bad));
  }

  Tape critic_tape;
  const Bound critic(critic_tape, nets_.critic, true);
  const auto features = nn::encode(critic_tape, critic, arch_, critic_tape.constant(prep.obs.images));
  const auto state = critic_tape.concat_cols({features, critic_tape.constant(prep.obs.proprio)});
  const auto q = nn::critic_heads(critic_tape, critic, arch_, state, critic_tape.constant(prep.actions));
  const auto critic_loss_var = critic_objective(critic_tape, q.q1, q.q2, target);
  const double critic_loss_value = critic_tape.value(critic_loss_var)(0, 0);
  if (!std::isfinite(critic_loss_value)) {
    Matrix per = critic_tape.value(q.q1) + critic_tape.value(q.q2);
    throw Error(ErrorKind::NonFinite,
                where + "non-finite critic loss at batch index " + std::to_string(first_non_finite_row(per)));
  }
  critic_tape.backward(critic_loss_var);
  const ParamSet critic_grads = critic_tape.gradients(nets_.critic);

  Tape actor_tape;
  const Bound actor(actor_tape, nets_.actor, true);
  const auto al = actor_loss_from_state(actor_tape, nets_.critic, actor, arch_, critic_tape.value(state), noise, alpha);
  const double actor_loss_value = actor_tape.value(al.loss)(0, 0);
  if (!std::isfinite(actor_loss_value)) {
    throw Error(ErrorKind::NonFinite,
                where + "non-finite actor loss at batch index " + std::to_string(first_non_finite_row(al.log_prob)));
  }
  actor_tape.backward(al.loss);
  const ParamSet actor_grads = actor_tape.gradients(nets_.actor);

  Tape alpha_tape;
  const Bound temp(alpha_tape, nets_.temperature, true);
  const auto tl = temperature_objective(alpha_tape, temp["log_alpha"], al.log_prob, hyper_.target_entropy);
  alpha_tape.backward(tl);
  const ParamSet alpha_grads = alpha_tape.gradients(nets_.temperature);

  if (!critic_grads.all_finite() || !actor_grads.all_finite() || !alpha_grads.all_finite()) {
    throw Error(ErrorKind::NonFinite, where + "non-finite gradient; parameters left unchanged");
  }
  nn::adam_step(nets_.critic, critic_grads, critic_opt_, {hyper_.lr_critic});
  nn::adam_step(nets_.actor, actor_grads, actor_opt_, {hyper_.lr_actor});
  nn::adam_step(nets_.temperature, alpha_grads, alpha_opt_, {hyper_.lr_alpha});
  nn::polyak_update(nets_.critic_target, nets_.critic, hyper_.tau);
  if (!nets_.critic.all_finite() || !nets_.actor.all_finite() || !nets_.temperature.all_finite()) {
    throw Error(ErrorKind::NonFinite, where + "parameters became non-finite");
  }

  ++updates_;
  return UpdateMetrics{updates_, critic_loss_value, actor_loss_value, nets_.alpha()};
}

nn::WeightSnapshot SacLearner::publish() {
  const std::array<nn::NamedGroup, 3> groups{{
      {"critic/", &nets_.critic},
      {"actor/", &nets_.actor},
      {"temperature/", &nets_.temperature},
  }};
  return snapshots_.take(groups);
}

std::unique_ptr<Policy> SacLearner::make_policy(std::uint64_t seed) const {
  return std::make_unique<SacPolicy>(arch_, seed);
}

Action SacLearner::act(const Observation& obs, ActMode mode) { return actor_.act_with(nets_.critic, nets_.actor, obs, mode); }

// --- RandomLearner ---------------------------------------------------------

namespace {

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  void load(const nn::WeightSnapshot& snapshot) override {
    if (!snapshot.checksum_ok()) throw Error(ErrorKind::Corruption, "snapshot failed its checksum");
  }
  Action act(const Observation&, ActMode mode) override {
    if (mode == ActMode::Mean) return Action{};
    return uniform_action(rng_);
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

UpdateMetrics RandomLearner::update(const Batch& batch) {
  if (batch.empty()) throw Error(ErrorKind::Usage, "empty batch");
  return UpdateMetrics{++updates_, 0.0, 0.0, 0.0};
}

nn::WeightSnapshot RandomLearner::publish() { return snapshots_.take(empty_); }

std::unique_ptr<Policy> RandomLearner::make_policy(std::uint64_t seed) const {
  return std::make_unique<RandomPolicy>(seed);
}

Action RandomLearner::act(const Observation&, ActMode mode) {
  if (mode == ActMode::Mean) return Action{};
  return uniform_action(rng_);
}

}  // namespace rtsac::sac
