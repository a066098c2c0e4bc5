#include "motionbank/adam.hpp"

#include <cmath>

#include "motionbank/errors.hpp"

namespace mb {

void adam_step(ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state,
               const AdamConfig& config) {
  for (const auto& [name, p] : params) {
    if (!p.trainable) continue;
    auto it = grads.find(name);
    if (it == grads.end()) throw ValidationError("adam_step: missing gradient for trainable parameter '" + name + "'");
    if (it->second.shape() != p.value.shape()) {
      throw ShapeError("adam_step: gradient for '" + name + "' has shape " + it->second.shape_string() +
                       ", parameter has " + p.value.shape_string());
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);

  for (const std::string& name : params.trainable_names()) {
    Tensor& value = params.value(name);
    const Tensor& g = grads.at(name);
    auto [mit, m_new] = state.m.try_emplace(name, value.shape());
    auto [vit, v_new] = state.v.try_emplace(name, value.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

}  // namespace mb
