#include "rtsac/nn/optim.hpp"

#include <cmath>
#include <string>

#include "rtsac/core/error.hpp"

namespace rtsac::nn {

AdamState AdamState::for_params(const ParamSet& params) {
  return AdamState{params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const AdamConfig& config) {
  if (!params.same_layout(grads) || !params.same_layout(state.m) || !params.same_layout(state.v)) {
    throw Error(ErrorKind::Configuration, "adam: gradient layout does not match parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const Matrix& g = grads[i].value;
    if (g.allFinite()) continue;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      if (!std::isfinite(g.data()[k])) {
        throw Error(ErrorKind::NonFinite, "adam: gradient of '" + grads[i].name + "' is non-finite at element " +
                                              std::to_string(k) + " (value " + std::to_string(g.data()[k]) + ")");
      }
    }
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto g = grads[i].value.array();
    auto m = state.m[i].value.array();
    auto v = state.v[i].value.array();
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.square();
    params[i].value.array() -= config.lr * (m / c1) / ((v / c2).sqrt() + config.eps);
  }
}

void polyak_update(ParamSet& target, const ParamSet& online, double tau) {
  if (!target.same_layout(online)) throw Error(ErrorKind::Configuration, "polyak: parameter layouts differ");
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::Configuration, "polyak: tau must lie in [0, 1]");
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i].value = tau * online[i].value + (1.0 - tau) * target[i].value;
  }
}

}  // namespace rtsac::nn
