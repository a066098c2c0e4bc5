#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "motionbank/params.hpp"

namespace mb {

struct AdamConfig {
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;

  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update of every trainable entry. Frozen entries are
// skipped even when a gradient is supplied; a trainable entry without a
// gradient is an error.
void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace mb
