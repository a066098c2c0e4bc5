#pragma once
// Adaptive fusion of the transition (STAB) and characteristic (ACB) features.
//   F = alpha/(1+alpha) * F_st + 1/(1+alpha) * F_ac
// alpha starts at 1 and, from step tau on, follows the recognizer's
// cross-entropy on the generated prefix:
//   alpha <- gamma * alpha + (1 - gamma) * (CE - alpha), clamped at 0.

#include <span>
#include <vector>

#include "motionbank/autodiff.hpp"

namespace mb {

struct AlphaConfig {
  double gamma = 0.9;
  std::size_t tau = 5;
  // alpha = CE directly from step tau on.
  bool disable_running_mean = false;
  // alpha <- gamma * alpha + (1 - gamma) * CE
  bool conventional_ema = false;
};

struct AlphaState {
  double alpha = 1.0;
  std::size_t t = 0;
};

struct FusionWeights {
  double transition;      // alpha / (1 + alpha)
  double characteristic;  // 1 / (1 + alpha)
};

// The two weights always sum to exactly 1.
FusionWeights fusion_weights(double alpha);

std::vector<double> fuse(std::span<const double> f_st, std::span<const double> f_ac, double alpha);
// Per-row alphas; alpha is a constant of the graph.
Var fuse(Var f_st, Var f_ac, std::span<const double> alphas);

AlphaState update_alpha(const AlphaState& state, double ce_loss, const AlphaConfig& config);

// -log p[label], with p clamped from below like the training loss.
double per_step_ce(std::span<const double> probs, int label);

}  // namespace mb
