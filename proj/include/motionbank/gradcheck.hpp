#pragma once

#include <functional>
#include <string>

#include "motionbank/autodiff.hpp"
#include "motionbank/params.hpp"

namespace mb {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Builds a scalar loss from the bound store on a fresh tape.
using LossBuilder = std::function<Var(Tape&)>;

// Compares backward() against central differences (f(p+h) - f(p-h)) / 2h for
// every coordinate of every trainable parameter. Per-coordinate error is
// |a - n| / max(|a|, |n|, floor); the floor keeps coordinates whose true
// gradient is zero from dividing finite-difference noise by itself.
GradCheckReport check_gradients(ParamStore& params, const LossBuilder& build, double h = 1e-5,
                                double floor = 1e-6);

}  // namespace mb
