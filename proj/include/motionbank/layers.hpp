#pragma once
// Parameterized building blocks. A layer only knows its parameter names and
// sizes; values live in a ParamStore and are bound through a Tape.

#include <string>

#include "motionbank/autodiff.hpp"

namespace mb {
class Rng;
}

namespace mb::nn {

// y = x W + b, W: (in x out), b: (out).
struct Linear {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;

  void init(ParamStore& params, Rng& rng, double bound) const;
  Var operator()(Tape& tape, Var x) const;
};

// Linear -> tanh -> Linear.
struct Mlp {
  Linear hidden;
  Linear output;

  Mlp() = default;
  Mlp(const std::string& name, std::size_t in, std::size_t width, std::size_t out);
  void init(ParamStore& params, Rng& rng, double bound) const;
  Var operator()(Tape& tape, Var x) const;
};

// Single GRU layer (gate order reset, update, candidate):
//   r = sigmoid(x Wx_r + bx_r + h Wh_r + bh_r)
//   z = sigmoid(x Wx_z + bx_z + h Wh_z + bh_z)
//   n = tanh(x Wx_n + bx_n + r * (h Wh_n + bh_n))
//   h' = (1 - z) * n + z * h
struct Gru {
  std::string name;
  std::size_t in = 0;
  std::size_t hidden = 0;

  void init(ParamStore& params, Rng& rng, double bound) const;
  Var step(Tape& tape, Var x, Var h) const;
  Var zero_state(Tape& tape, std::size_t batch) const;
};

// Default fan-in bound 1/sqrt(in).
double fan_in_bound(std::size_t in);

}  // namespace mb::nn
