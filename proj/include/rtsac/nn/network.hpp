#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rtsac/core/types.hpp"
#include "rtsac/nn/param_set.hpp"
#include "rtsac/nn/tape.hpp"

namespace rtsac::nn {

struct ConvSpec {
  int channels = 8;
  int kernel = 3;
  int stride = 2;
};

struct Architecture {
  int image_h = 90;
  int image_w = 160;
  int frames = static_cast<int>(kStackFrames);
  std::vector<ConvSpec> encoder{{8, 3, 2}, {16, 3, 2}};
  std::vector<int> trunk{128, 128};
  int proprio_dim = static_cast<int>(kProprioDim);
  int action_dim = static_cast<int>(kJoints);
  double log_std_min = -10.0;
  double log_std_max = 2.0;

  int input_channels() const noexcept { return 3 * frames; }
  std::vector<ConvGeometry> conv_geometry() const;
  int encoder_output_dim() const;
  // Throws ErrorKind::Configuration when layer sizes do not chain.
  void validate() const;
};

// Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), for
// weights and biases alike. Deterministic in `seed`.
//
// Critic tensors: encoder.conv{i}.{weight,bias}, q1.fc{i}.*, q2.fc{i}.*
// Actor tensors:  pi.fc{i}.*  (the actor reads the critic's encoder)
ParamSet init_critic(const Architecture& arch, std::uint64_t seed);
ParamSet init_actor(const Architecture& arch, std::uint64_t seed);
ParamSet init_mlp(const std::string& prefix, const std::vector<int>& sizes, std::uint64_t seed);

// Binds tensors of a ParamSet to tape leaves on first use, either as
// trainable parameters or as constants.
class Bound {
 public:
  Bound(Tape& tape, const ParamSet& params, bool trainable);
  Tape::Var operator[](std::string_view name) const;

 private:
  Tape* tape_;
  const ParamSet* params_;
  bool trainable_;
  mutable std::vector<Tape::Var> vars_;
};

// Observations flattened for the networks: images scaled to [0, 1] in HWC
// order with the 3 stacked frames interleaved as 9 channels per pixel.
struct ObsBatch {
  Matrix images;
  Matrix proprio;
};

ObsBatch make_obs_batch(std::span<const Observation* const> observations);
ObsBatch make_obs_batch(const Observation& observation);
Matrix make_action_batch(std::span<const Action* const> actions);

// fc0..fcN-1 with rectifier between layers and a linear output.
Tape::Var mlp(Tape& tape, const Bound& params, const std::string& prefix, std::size_t layers, Tape::Var input);

Tape::Var encode(Tape& tape, const Bound& critic, const Architecture& arch, Tape::Var images);

struct CriticOutput {
  Tape::Var q1;
  Tape::Var q2;
};

// `state` is [encoder features | proprioception].
CriticOutput critic_heads(Tape& tape, const Bound& critic, const Architecture& arch, Tape::Var state,
                          Tape::Var action);

struct ActorOutput {
  Tape::Var mean;
  Tape::Var log_std;  // clamped to [log_std_min, log_std_max]
};

ActorOutput actor_head(Tape& tape, const Bound& actor, const Architecture& arch, Tape::Var state);

// Convenience forward passes (no gradients recorded that callers keep).
struct CriticValues {
  Matrix q1;
  Matrix q2;
};
CriticValues forward_critic(const ParamSet& critic, const Architecture& arch, const ObsBatch& obs,
                            const Matrix& actions);
struct ActorValues {
  Matrix mean;
  Matrix log_std;
};
ActorValues forward_actor(const ParamSet& critic, const ParamSet& actor, const Architecture& arch,
                          const ObsBatch& obs);

}  // namespace rtsac::nn
