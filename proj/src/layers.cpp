#include "motionbank/layers.hpp"

#include <cmath>

#include "motionbank/rng.hpp"

namespace mb::nn {

double fan_in_bound(std::size_t in) { return 1.0 / std::sqrt(static_cast<double>(in)); }

void Linear::init(ParamStore& params, Rng& rng, double bound) const {
  params.add(name + ".W", uniform_tensor(rng, in, out, bound));
  params.add(name + ".b", Tensor(Tensor::Shape{out}));
}

Var Linear::operator()(Tape& tape, Var x) const {
  return ad::add(ad::matmul(x, tape.param(name + ".W")), tape.param(name + ".b"));
}

Mlp::Mlp(const std::string& name, std::size_t in, std::size_t width, std::size_t out)
    : hidden{name + ".0", in, width}, output{name + ".1", width, out} {}

void Mlp::init(ParamStore& params, Rng& rng, double bound) const {
  hidden.init(params, rng, bound);
  output.init(params, rng, bound);
}

Var Mlp::operator()(Tape& tape, Var x) const { return output(tape, ad::tanh(hidden(tape, x))); }

void Gru::init(ParamStore& params, Rng& rng, double bound) const {
  params.add(name + ".Wx", uniform_tensor(rng, in, 3 * hidden, bound));
  params.add(name + ".Wh", uniform_tensor(rng, hidden, 3 * hidden, bound));
  params.add(name + ".bx", Tensor(Tensor::Shape{3 * hidden}));
  params.add(name + ".bh", Tensor(Tensor::Shape{3 * hidden}));
}

Var Gru::step(Tape& tape, Var x, Var h) const {
  const std::size_t H = hidden;
  Var gx = ad::add(ad::matmul(x, tape.param(name + ".Wx")), tape.param(name + ".bx"));
  Var gh = ad::add(ad::matmul(h, tape.param(name + ".Wh")), tape.param(name + ".bh"));
  Var rz = ad::sigmoid(ad::add(ad::slice_cols(gx, 0, 2 * H), ad::slice_cols(gh, 0, 2 * H)));
  Var r = ad::slice_cols(rz, 0, H);
  Var z = ad::slice_cols(rz, H, H);
  Var n = ad::tanh(ad::add(ad::slice_cols(gx, 2 * H, H), ad::mul(r, ad::slice_cols(gh, 2 * H, H))));
  return ad::add(n, ad::mul(z, ad::sub(h, n)));
}

Var Gru::zero_state(Tape& tape, std::size_t batch) const { return tape.constant(Tensor::zeros(batch, hidden)); }

}  // namespace mb::nn
