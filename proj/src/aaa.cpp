#include "motionbank/aaa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "motionbank/errors.hpp"

namespace mb {

namespace {
void check_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ValidationError("fusion alpha must be finite and >= 0, got " + std::to_string(alpha));
  }
}
}  // namespace

FusionWeights fusion_weights(double alpha) {
  check_alpha(alpha);
  const double characteristic = 1.0 / (1.0 + alpha);
  return {1.0 - characteristic, characteristic};
}

std::vector<double> fuse(std::span<const double> f_st, std::span<const double> f_ac, double alpha) {
  if (f_st.size() != f_ac.size()) {
    throw ShapeError("fuse: F_st has " + std::to_string(f_st.size()) + " entries, F_ac has " +
                     std::to_string(f_ac.size()));
  }
  const FusionWeights w = fusion_weights(alpha);
  std::vector<double> out(f_st.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = w.transition * f_st[i] + w.characteristic * f_ac[i];
  return out;
}

Var fuse(Var f_st, Var f_ac, std::span<const double> alphas) {
  if (f_st.value().shape() != f_ac.value().shape()) {
    throw ShapeError("fuse: F_st " + f_st.value().shape_string() + " vs F_ac " + f_ac.value().shape_string());
  }
  std::vector<double> ws(alphas.size());
  std::vector<double> wc(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const FusionWeights w = fusion_weights(alphas[i]);
    ws[i] = w.transition;
    wc[i] = w.characteristic;
  }
  return ad::add(ad::scale_rows(f_st, ws), ad::scale_rows(f_ac, wc));
}

AlphaState update_alpha(const AlphaState& state, double ce, const AlphaConfig& config) {
  if (!(ce >= 0.0)) throw ValidationError("update_alpha: cross-entropy must be >= 0, got " + std::to_string(ce));
  AlphaState next{state.alpha, state.t + 1};
  if (state.t < config.tau) {
    next.alpha = 1.0;
  } else if (config.disable_running_mean) {
    next.alpha = ce;
  } else if (config.conventional_ema) {
    next.alpha = config.gamma * state.alpha + (1.0 - config.gamma) * ce;
  } else {
    next.alpha = config.gamma * state.alpha + (1.0 - config.gamma) * (ce - state.alpha);
  }
  next.alpha = std::max(0.0, next.alpha);
  return next;
}

double per_step_ce(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw ValidationError("per_step_ce: label " + std::to_string(label) + " outside [0, " +
                          std::to_string(probs.size()) + ")");
  }
  return -std::log(std::clamp(probs[static_cast<std::size_t>(label)], kProbabilityFloor, 1.0));
}

}  // namespace mb
