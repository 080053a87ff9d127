#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "rtsac/nn/network.hpp"
#include "rtsac/nn/tape.hpp"

namespace rtsac::testing {

using LossFn = std::function<nn::Tape::Var(nn::Tape&, const nn::Bound&)>;

struct Evaluation {
  double loss = 0.0;
  std::vector<bool> pieces;
};

inline Evaluation evaluate_pieces(nn::ParamSet& params, const LossFn& loss) {
  nn::Tape tape;
  tape.record_pieces(true);
  const nn::Bound bound(tape, params, false);
  const double value = tape.value(loss(tape, bound))(0, 0);
  return {value, tape.pieces()};
}

inline double evaluate(nn::ParamSet& params, const LossFn& loss) { return evaluate_pieces(params, loss).loss; }

inline nn::ParamSet analytic(nn::ParamSet& params, const LossFn& loss) {
  nn::Tape tape;
  const nn::Bound bound(tape, params, true);
  tape.backward(loss(tape, bound));
  return tape.gradients(params);
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Elements whose +-step evaluations landed on a different piece of a relu,
  // clamp or min than the unperturbed pass; central differences do not apply.
  std::size_t skipped = 0;
};

// Central differences on up to `per_tensor` random elements of each tensor.
// Relative error uses max(|a|, |n|, floor) as denominator so exact zeros do
// not blow up.
inline GradCheck check_gradients(nn::ParamSet& params, const LossFn& loss, std::mt19937_64& rng,
                                 std::size_t per_tensor = 12, double step = 1e-5, double floor = 1e-6) {
  const nn::ParamSet grads = analytic(params, loss);
  const std::vector<bool> base = evaluate_pieces(params, loss).pieces;
  GradCheck out;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& value = params[t].value;
    const Eigen::Index n = value.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    const std::size_t count = std::min<std::size_t>(per_tensor, static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < count; ++k) {
      const Eigen::Index i = count == static_cast<std::size_t>(n) ? static_cast<Eigen::Index>(k) : pick(rng);
      const double saved = value.data()[i];
      value.data()[i] = saved + step;
      const Evaluation up = evaluate_pieces(params, loss);
      value.data()[i] = saved - step;
      const Evaluation down = evaluate_pieces(params, loss);
      value.data()[i] = saved;
      if (up.pieces != base || down.pieces != base) {
        ++out.skipped;
        continue;
      }
      const double numeric = (up.loss - down.loss) / (2.0 * step);
      const double a = grads[t].value.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
      ++out.checked;
    }
  }
  return out;
}

}  // namespace rtsac::testing
