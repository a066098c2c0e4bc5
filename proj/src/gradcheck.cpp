#include "motionbank/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mb {

GradCheckReport check_gradients(ParamStore& params, const LossBuilder& build, double h, double floor) {
  if (!(h > 0.0)) throw std::invalid_argument("check_gradients: h must be positive");
  std::map<std::string, Tensor> analytic;
  {
    Tape tape(params);
    Var loss = build(tape);
    tape.backward(loss);
    analytic = tape.param_grads();
  }
  auto evaluate = [&]() {
    Tape tape(params, false);
    return build(tape).value().item();
  };

  GradCheckReport report;
  for (const std::string& name : params.trainable_names()) {
    Tensor& value = params.value(name);
    const Tensor& g = analytic.at(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + h;
      const double plus = evaluate();
      value[i] = saved - h;
      const double minus = evaluate();
      value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double denom = std::max({std::abs(g[i]), std::abs(numeric), floor});
      const double err = std::abs(g[i] - numeric) / denom;
      ++report.coordinates;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = name;
        report.worst_index = i;
        report.analytic = g[i];
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace mb
