#include "motionbank/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "motionbank/errors.hpp"
#include "motionbank/kernels.hpp"

namespace mb {

Var Tape::push(Tensor value, bool requires_grad, BackwardFn backward) {
  if (nodes_.size() >= UINT32_MAX) throw std::runtime_error("tape node limit exceeded");
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::leaf(Tensor value) { return push(std::move(value), grad_enabled_, nullptr); }

const ParamStore& Tape::params() const {
  if (params_ == nullptr) throw std::logic_error("tape has no bound parameter store");
  return *params_;
}

Var Tape::param(const std::string& name) {
  if (auto it = bound_.find(name); it != bound_.end()) return it->second;
  const Parameter& p = params().at(name);
  Var v = p.trainable ? leaf(p.value) : constant(p.value);
  bound_.emplace(name, v);
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      if (&v.tape() != this) throw std::logic_error("op inputs belong to a different tape");
      needs = needs || requires_grad(v);
    }
  }
  return push(std::move(value), needs, std::move(backward));
}

Tensor* Tape::grad_target(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return &n.grad;
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + value(loss).shape_string());
  }
  if (backward_done_) throw std::logic_error("backward() already ran on this tape");
  backward_done_ = true;
  if (!requires_grad(loss)) return;
  Tensor* seed = grad_target(loss);
  (*seed)[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.has_grad || !n.backward) continue;
    n.backward(*this, n.value, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.has_grad) return n.grad;
  return Tensor(n.value.shape());
}

std::map<std::string, Tensor> Tape::param_grads() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, p] : params()) {
    if (!p.trainable) continue;
    auto it = bound_.find(name);
    out.emplace(name, it == bound_.end() ? Tensor(p.value.shape()) : grad(it->second));
  }
  return out;
}

namespace ad {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

void require_nonempty(const Tensor& a, const char* op) {
  if (a.empty()) throw ShapeError(std::string(op) + ": empty input");
}

void add_into(Tensor& dst, const Tensor& src) {
  kernels::axpy(1.0, src.ptr(), dst.ptr(), src.size());
}

template <typename F>
Var unary(Var a, F f, Tape::BackwardFn backward) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return a.tape().record(std::move(out), {a}, std::move(backward));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_nonempty(av, "matmul");
  if (bv.rank() != 2 || av.cols() != bv.rows()) {
    throw ShapeError("matmul: incompatible shapes " + av.shape_string() + " and " + bv.shape_string());
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::zeros(m, n);
  kernels::active().gemm_nn(m, n, k, av.ptr(), k, bv.ptr(), n, out.ptr(), n);
  return a.tape().record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor&, const Tensor& g) {
    const auto& kt = kernels::active();
    if (Tensor* ga = t.grad_target(a)) kt.gemm_nt(m, k, n, g.ptr(), n, t.value(b).ptr(), n, ga->ptr(), k);
    if (Tensor* gb = t.grad_target(b)) kt.gemm_tn(k, n, m, t.value(a).ptr(), k, g.ptr(), n, gb->ptr(), n);
  });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() == bv.shape()) {
    Tensor out = av;
    add_into(out, bv);
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
      if (Tensor* ga = t.grad_target(a)) add_into(*ga, g);
      if (Tensor* gb = t.grad_target(b)) add_into(*gb, g);
    });
  }
  if (av.rank() == 2 && bv.rows() == 1 && bv.size() == av.cols()) {
    const std::size_t rows = av.rows(), cols = av.cols();
    Tensor out = av;
    for (std::size_t r = 0; r < rows; ++r) kernels::axpy(1.0, bv.ptr(), out.ptr() + r * cols, cols);
    return a.tape().record(std::move(out), {a, b}, [a, b, rows, cols](Tape& t, const Tensor&, const Tensor& g) {
      if (Tensor* ga = t.grad_target(a)) add_into(*ga, g);
      if (Tensor* gb = t.grad_target(b)) {
        for (std::size_t r = 0; r < rows; ++r) kernels::axpy(1.0, g.ptr() + r * cols, gb->ptr(), cols);
      }
    });
  }
  throw ShapeError("add: shape mismatch " + av.shape_string() + " vs " + bv.shape_string());
}

Var sub(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  kernels::axpy(-1.0, bv.ptr(), out.ptr(), out.size());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) add_into(*ga, g);
    if (Tensor* gb = t.grad_target(b)) kernels::axpy(-1.0, g.ptr(), gb->ptr(), g.size());
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      const Tensor& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (Tensor* gb = t.grad_target(b)) {
      const Tensor& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [a, factor](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) kernels::axpy(factor, g.ptr(), ga->ptr(), g.size());
  });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [a](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) add_into(*ga, g);
  });
}

Var scale_rows(Var a, std::span<const double> factors) {
  const Tensor& av = a.value();
  if (factors.size() != av.rows()) {
    throw ShapeError("scale_rows: " + std::to_string(factors.size()) + " factors for shape " + av.shape_string());
  }
  const std::size_t cols = av.cols();
  std::vector<double> f(factors.begin(), factors.end());
  Tensor out(av.shape());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = f[r] * av[r * cols + c];
  }
  return a.tape().record(std::move(out), {a}, [a, f = std::move(f), cols](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      for (std::size_t r = 0; r < f.size(); ++r) kernels::axpy(f[r], g.ptr() + r * cols, ga->ptr() + r * cols, cols);
    }
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rows = parts[0].value().rows();
  bool all_vectors = true;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    require_nonempty(v, "concat");
    if (v.rows() != rows) {
      throw ShapeError("concat: row mismatch " + parts[0].value().shape_string() + " vs " + v.shape_string());
    }
    all_vectors = all_vectors && v.rank() == 1;
    total += v.cols();
  }
  Tensor out = all_vectors ? Tensor(Tensor::Shape{total}) : Tensor::zeros(rows, total);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    const std::size_t c = v.cols();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(v.ptr() + r * c, c, out.ptr() + r * total + off);
    offsets.push_back(off);
    off += c;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& tape = parts[0].tape();
  return tape.record(std::move(out), std::span<const Var>(inputs),
                     [inputs, offsets, rows, total](Tape& t, const Tensor&, const Tensor& g) {
                       for (std::size_t i = 0; i < inputs.size(); ++i) {
                         Tensor* gi = t.grad_target(inputs[i]);
                         if (!gi) continue;
                         const std::size_t c = gi->cols();
                         for (std::size_t r = 0; r < rows; ++r) {
                           kernels::axpy(1.0, g.ptr() + r * total + offsets[i], gi->ptr() + r * c, c);
                         }
                       }
                     });
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  const std::size_t cols = av.cols(), rows = av.rows();
  if (count == 0 || begin + count > cols) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") outside shape " + av.shape_string());
  }
  Tensor out = av.rank() == 1 ? Tensor(Tensor::Shape{count}) : Tensor::zeros(rows, count);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(av.ptr() + r * cols + begin, count, out.ptr() + r * count);
  return a.tape().record(std::move(out), {a}, [a, begin, count, rows, cols](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      for (std::size_t r = 0; r < rows; ++r) kernels::axpy(1.0, g.ptr() + r * count, ga->ptr() + r * cols + begin, count);
    }
  });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [a](Tape& t, const Tensor& y, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
    }
  });
}

Var sigmoid(Var a) {
  auto f = [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  };
  return unary(a, f, [a](Tape& t, const Tensor& y, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i] * (1.0 - y[i]);
    }
  });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [a](Tape& t, const Tensor& y, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i];
    }
  });
}

Var log(Var a) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw ValidationError("log: non-positive input");
  }
  return unary(a, [](double x) { return std::log(x); }, [a](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      const Tensor& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] / av[i];
    }
  });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [a](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      const Tensor& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += 2.0 * g[i] * av[i];
    }
  });
}

Var softmax(Var a) {
  const Tensor& av = a.value();
  require_nonempty(av, "softmax");
  const std::size_t rows = av.rows(), cols = av.cols();
  Tensor out(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.ptr() + r * cols;
    double* y = out.ptr() + r * cols;
    const double mx = *std::max_element(x, x + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (y[c] = std::exp(x[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= z;
  }
  return a.tape().record(std::move(out), {a}, [a, rows, cols](Tape& t, const Tensor& y, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double* yr = y.ptr() + r * cols;
        const double* gr = g.ptr() + r * cols;
        const double s = kernels::dot(yr, gr, cols);
        double* dr = ga->ptr() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) dr[c] += yr[c] * (gr[c] - s);
      }
    }
  });
}

Var sum(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (double v : av.data()) s += v;
  return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) {
      for (double& v : ga->data()) v += g[0];
    }
  });
}

Var mean(Var a) {
  require_nonempty(a.value(), "mean");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_squares(Var a) {
  const Tensor& av = a.value();
  const double s = kernels::dot(av.ptr(), av.ptr(), av.size());
  return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) kernels::axpy(2.0 * g[0], t.value(a).ptr(), ga->ptr(), ga->size());
  });
}

Var dot(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size() || av.rows() != 1 || bv.rows() != 1) {
    throw ShapeError("dot: needs two vectors of equal length, got " + av.shape_string() + " and " + bv.shape_string());
  }
  const double s = kernels::dot(av.ptr(), bv.ptr(), av.size());
  return a.tape().record(Tensor::scalar(s), {a, b}, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    if (Tensor* ga = t.grad_target(a)) kernels::axpy(g[0], t.value(b).ptr(), ga->ptr(), ga->size());
    if (Tensor* gb = t.grad_target(b)) kernels::axpy(g[0], t.value(a).ptr(), gb->ptr(), gb->size());
  });
}

Var mse(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mse");
  require_nonempty(a.value(), "mse");
  const double n = static_cast<double>(a.value().size());
  return scale(sum_squares(sub(a, b)), 1.0 / n);
}

Var cross_entropy(Var probs, std::span<const int> labels) {
  const Tensor& pv = probs.value();
  require_nonempty(pv, "cross_entropy");
  const std::size_t rows = pv.rows(), cols = pv.cols();
  if (labels.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for probabilities of shape " +
                     pv.shape_string());
  }
  std::vector<int> lab(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (lab[r] < 0 || static_cast<std::size_t>(lab[r]) >= cols) {
      throw ValidationError("cross_entropy: label " + std::to_string(lab[r]) + " outside [0, " +
                            std::to_string(cols) + ")");
    }
    total -= std::log(std::clamp(pv[r * cols + lab[r]], kProbabilityFloor, 1.0));
  }
  total /= static_cast<double>(rows);
  return probs.tape().record(Tensor::scalar(total), {probs},
                             [probs, lab = std::move(lab), rows, cols](Tape& t, const Tensor&, const Tensor& g) {
                               Tensor* gp = t.grad_target(probs);
                               if (!gp) return;
                               const Tensor& pv = t.value(probs);
                               for (std::size_t r = 0; r < rows; ++r) {
                                 const std::size_t idx = r * cols + lab[r];
                                 const double p = pv[idx];
                                 if (p < kProbabilityFloor || p > 1.0) continue;
                                 (*gp)[idx] -= g[0] / (static_cast<double>(rows) * p);
                               }
                             });
}

}  // namespace ad
}  // namespace mb
