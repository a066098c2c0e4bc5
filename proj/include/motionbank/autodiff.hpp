#pragma once
// Reverse-mode differentiation over a per-step tape.
//
// A Tape owns every intermediate value created while building a loss. Ops
// append nodes in creation order; backward() walks them in reverse, so the
// gradient computation is deterministic for a fixed graph. A tape built with
// gradients disabled records values only and serves as the inference path.

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "motionbank/params.hpp"
#include "motionbank/tensor.hpp"

namespace mb {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  explicit operator bool() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  // Receives the node's own output value and the incoming gradient.
  using BackwardFn = std::function<void(Tape&, const Tensor& out, const Tensor& grad_out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  explicit Tape(const ParamStore& params, bool grad_enabled = true)
      : params_(&params), grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor value);
  // Differentiable input not tied to a parameter store.
  Var leaf(Tensor value);
  // Bound parameter; frozen entries come back as constants. Repeated calls
  // with the same name return the same node.
  Var param(const std::string& name);
  const ParamStore& params() const;

  // Appends an op result. The node requires grad iff any input does, and the
  // backward function is kept only in that case.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  // Gradient accumulator for `v`, zero-initialized on first access; null if
  // `v` does not require grad.
  Tensor* grad_target(Var v);

  void backward(Var loss);
  // Zeros when nothing flowed into `v`.
  Tensor grad(Var v) const;
  // Gradient for every trainable entry of the bound store (zeros for entries
  // that are not on the loss path).
  std::map<std::string, Tensor> param_grads() const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  Var push(Tensor value, bool requires_grad, BackwardFn backward);

  std::deque<Node> nodes_;
  const ParamStore* params_ = nullptr;
  std::map<std::string, Var, std::less<>> bound_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }
inline bool Var::requires_grad() const { return tape_->requires_grad(*this); }

namespace ad {

// (m x k) * (k x n). Rank-1 left operands are treated as a single row.
Var matmul(Var a, Var b);
// Elementwise; `b` may also be a length-n vector (or 1 x n) broadcast over
// the rows of an (m x n) `a`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);
// Row i multiplied by the constant factors[i].
Var scale_rows(Var a, std::span<const double> factors);
// Concatenation along the last axis; all inputs share the row count.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);

Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
// Along the last axis, max-subtracted.
Var softmax(Var a);

Var sum(Var a);
Var mean(Var a);
Var sum_squares(Var a);
Var dot(Var a, Var b);
// mean((a - b)^2) over all elements.
Var mse(Var a, Var b);
// Mean over rows of -log p[row, label[row]], probabilities clamped to
// [1e-12, 1].
Var cross_entropy(Var probs, std::span<const int> labels);

}  // namespace ad

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace mb
