#pragma once

#include <cstdint>

#include "rtsac/nn/param_set.hpp"

namespace rtsac::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments plus the step counter; persists across calls.
struct AdamState {
  ParamSet m;
  ParamSet v;
  std::int64_t t = 0;

  static AdamState for_params(const ParamSet& params);
};

// One bias-corrected Adam update in place. Rejects non-finite gradients
// (ErrorKind::NonFinite, parameters and moments untouched) and layout
// mismatches (ErrorKind::Configuration).
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const AdamConfig& config);

// target <- tau * online + (1 - tau) * target.
void polyak_update(ParamSet& target, const ParamSet& online, double tau);

}  // namespace rtsac::nn
