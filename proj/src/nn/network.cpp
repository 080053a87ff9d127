#include "rtsac/nn/network.hpp"

#include <cmath>
#include <random>

#include "rtsac/core/error.hpp"

namespace rtsac::nn {

std::vector<ConvGeometry> Architecture::conv_geometry() const {
  std::vector<ConvGeometry> out;
  int h = image_h;
  int w = image_w;
  int c = input_channels();
  for (const auto& layer : encoder) {
    ConvGeometry g{h, w, c, layer.kernel, layer.stride, layer.channels};
    out.push_back(g);
    h = g.out_h();
    w = g.out_w();
    c = g.out_c;
  }
  return out;
}

int Architecture::encoder_output_dim() const {
  if (encoder.empty()) return image_h * image_w * input_channels();
  const auto geo = conv_geometry();
  return geo.back().out_h() * geo.back().out_w() * geo.back().out_c;
}

void Architecture::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Configuration, "architecture: " + what); };
  if (image_h <= 0 || image_w <= 0 || frames <= 0) fail("image dimensions must be positive");
  if (proprio_dim < 0 || action_dim <= 0) fail("bad proprioception or action size");
  if (!(log_std_min < log_std_max)) fail("log_std bounds are inverted");
  for (const auto& g : conv_geometry()) {
    if (g.kernel <= 0 || g.stride <= 0 || g.out_c <= 0) fail("convolution parameters must be positive");
    if (g.kernel > g.in_h || g.kernel > g.in_w) fail("convolution kernel larger than its input");
  }
  for (int n : trunk) {
    if (n <= 0) fail("trunk layer sizes must be positive");
  }
}

namespace {

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

void add_mlp(ParamSet& params, const std::string& prefix, const std::vector<int>& sizes, std::mt19937_64& rng) {
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int fan_in = sizes[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const std::string base = prefix + ".fc" + std::to_string(i);
    params.add(base + ".weight", {fan_in, sizes[i + 1]}, uniform(fan_in, sizes[i + 1], bound, rng));
    params.add(base + ".bias", {sizes[i + 1]}, uniform(1, sizes[i + 1], bound, rng));
  }
}

std::vector<int> head_sizes(int input, const std::vector<int>& trunk, int output) {
  std::vector<int> sizes{input};
  sizes.insert(sizes.end(), trunk.begin(), trunk.end());
  sizes.push_back(output);
  return sizes;
}

int state_dim(const Architecture& arch) { return arch.encoder_output_dim() + arch.proprio_dim; }

}  // namespace

ParamSet init_mlp(const std::string& prefix, const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw Error(ErrorKind::Configuration, "an MLP needs at least two layer sizes");
  std::mt19937_64 rng(seed);
  ParamSet params;
  add_mlp(params, prefix, sizes, rng);
  return params;
}

ParamSet init_critic(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  ParamSet params;
  const auto geo = arch.conv_geometry();
  for (std::size_t i = 0; i < geo.size(); ++i) {
    const auto& g = geo[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(g.patch_size()));
    const std::string base = "encoder.conv" + std::to_string(i);
    params.add(base + ".weight", {g.kernel, g.kernel, g.in_c, g.out_c}, uniform(g.patch_size(), g.out_c, bound, rng));
    params.add(base + ".bias", {g.out_c}, uniform(1, g.out_c, bound, rng));
  }
  const auto sizes = head_sizes(state_dim(arch) + arch.action_dim, arch.trunk, 1);
  add_mlp(params, "q1", sizes, rng);
  add_mlp(params, "q2", sizes, rng);
  return params;
}

ParamSet init_actor(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  ParamSet params;
  add_mlp(params, "pi", head_sizes(state_dim(arch), arch.trunk, 2 * arch.action_dim), rng);
  return params;
}

Bound::Bound(Tape& tape, const ParamSet& params, bool trainable)
    : tape_(&tape), params_(&params), trainable_(trainable), vars_(params.size()) {}

Tape::Var Bound::operator[](std::string_view name) const {
  const auto i = params_->find(name);
  if (!i) throw Error(ErrorKind::Configuration, "no tensor named '" + std::string(name) + "'");
  Tape::Var& v = vars_[*i];
  if (v.id < 0) v = trainable_ ? tape_->parameter(*params_, *i) : tape_->borrow((*params_)[*i].value);
  return v;
}

ObsBatch make_obs_batch(std::span<const Observation* const> observations) {
  if (observations.empty()) throw Error(ErrorKind::Usage, "empty observation batch");
  const int h = observations[0]->image_height();
  const int w = observations[0]->image_width();
  const Eigen::Index pixels = static_cast<Eigen::Index>(h) * w;
  ObsBatch batch{Matrix(static_cast<Eigen::Index>(observations.size()), pixels * 9),
                 Matrix(static_cast<Eigen::Index>(observations.size()), kProprioDim)};
  constexpr double kScale = 1.0 / 255.0;
  for (std::size_t b = 0; b < observations.size(); ++b) {
    const Observation& obs = *observations[b];
    if (obs.image_height() != h || obs.image_width() != w) {
      throw Error(ErrorKind::Configuration, "observation batch mixes image sizes");
    }
    double* row = batch.images.row(static_cast<Eigen::Index>(b)).data();
    for (std::size_t f = 0; f < kStackFrames; ++f) {
      const std::uint8_t* src = obs.image_stack[f]->rgb.data();
      for (Eigen::Index p = 0; p < pixels; ++p) {
        double* dst = row + p * 9 + static_cast<Eigen::Index>(f) * 3;
        dst[0] = src[p * 3] * kScale;
        dst[1] = src[p * 3 + 1] * kScale;
        dst[2] = src[p * 3 + 2] * kScale;
      }
    }
    const auto proprio = obs.proprioception();
    for (std::size_t k = 0; k < kProprioDim; ++k) batch.proprio(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = proprio[k];
  }
  return batch;
}

ObsBatch make_obs_batch(const Observation& observation) {
  const Observation* one = &observation;
  return make_obs_batch(std::span<const Observation* const>(&one, 1));
}

Matrix make_action_batch(std::span<const Action* const> actions) {
  Matrix out(static_cast<Eigen::Index>(actions.size()), kJoints);
  for (std::size_t b = 0; b < actions.size(); ++b) {
    for (std::size_t j = 0; j < kJoints; ++j) {
      out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)) = actions[b]->joint_velocity_command[j];
    }
  }
  return out;
}

Tape::Var mlp(Tape& tape, const Bound& params, const std::string& prefix, std::size_t layers, Tape::Var input) {
  Tape::Var h = input;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string base = prefix + ".fc" + std::to_string(i);
    h = tape.add_bias(tape.matmul(h, params[base + ".weight"]), params[base + ".bias"]);
    if (i + 1 < layers) h = tape.relu(h);
  }
  return h;
}

Tape::Var encode(Tape& tape, const Bound& critic, const Architecture& arch, Tape::Var images) {
  Tape::Var h = images;
  const auto geo = arch.conv_geometry();
  for (std::size_t i = 0; i < geo.size(); ++i) {
    const std::string base = "encoder.conv" + std::to_string(i);
    h = tape.relu(tape.conv2d(h, critic[base + ".weight"], critic[base + ".bias"], geo[i]));
  }
  return h;
}

CriticOutput critic_heads(Tape& tape, const Bound& critic, const Architecture& arch, Tape::Var state,
                          Tape::Var action) {
  const Tape::Var input = tape.concat_cols({state, action});
  const std::size_t layers = arch.trunk.size() + 1;
  return {mlp(tape, critic, "q1", layers, input), mlp(tape, critic, "q2", layers, input)};
}

ActorOutput actor_head(Tape& tape, const Bound& actor, const Architecture& arch, Tape::Var state) {
  const Tape::Var out = mlp(tape, actor, "pi", arch.trunk.size() + 1, state);
  return {tape.slice_cols(out, 0, arch.action_dim),
          tape.clamp(tape.slice_cols(out, arch.action_dim, arch.action_dim), arch.log_std_min, arch.log_std_max)};
}

CriticValues forward_critic(const ParamSet& critic, const Architecture& arch, const ObsBatch& obs,
                            const Matrix& actions) {
  Tape tape;
  const Bound p(tape, critic, false);
  const Tape::Var features = encode(tape, p, arch, tape.constant(obs.images));
  const Tape::Var state = tape.concat_cols({features, tape.constant(obs.proprio)});
  const auto q = critic_heads(tape, p, arch, state, tape.constant(actions));
  return {tape.value(q.q1), tape.value(q.q2)};
}

ActorValues forward_actor(const ParamSet& critic, const ParamSet& actor, const Architecture& arch,
                          const ObsBatch& obs) {
  Tape tape;
  const Bound c(tape, critic, false);
  const Bound a(tape, actor, false);
  const Tape::Var features = encode(tape, c, arch, tape.constant(obs.images));
  const Tape::Var state = tape.concat_cols({features, tape.constant(obs.proprio)});
  const auto out = actor_head(tape, a, arch, state);
  return {tape.value(out.mean), tape.value(out.log_std)};
}

}  // namespace rtsac::nn
