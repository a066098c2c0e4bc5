#include "motionbank/banks.hpp"

#include <cmath>

#include "motionbank/arm.hpp"
#include "motionbank/control_trace.hpp"
#include "motionbank/errors.hpp"
#include "motionbank/kernels.hpp"
#include "motionbank/rng.hpp"

namespace mb {

namespace {

std::size_t scan_cell(const double* keys, std::size_t key_dim, std::size_t count, const double* query,
                      double& best) {
  if (count == 0) throw ValidationError("retrieval on an empty bank cell");
  std::size_t arg = 0;
  best = kernels::dot(query, keys, key_dim);
  for (std::size_t i = 1; i < count; ++i) {
    const double s = kernels::dot(query, keys + i * key_dim, key_dim);
    if (s > best) {
      best = s;
      arg = i;
    }
  }
  return arg;
}

void check_label(int label, int classes, const char* what) {
  if (label < 0 || label >= classes) {
    throw ValidationError(std::string(what) + " label " + std::to_string(label) + " outside [0, " +
                          std::to_string(classes) + ")");
  }
}

Tensor one_row(std::span<const double> v) { return Tensor::matrix(1, v.size(), {v.begin(), v.end()}); }

std::vector<double> first_row(Var v) {
  auto r = v.value().row(0);
  return {r.begin(), r.end()};
}

}  // namespace

HardRetrieval retrieve_hard(const Tensor& keys, const Tensor& values, std::span<const double> query) {
  if (keys.rows() != values.rows()) {
    throw ShapeError("retrieve_hard: keys " + keys.shape_string() + " vs values " + values.shape_string());
  }
  if (keys.cols() != query.size()) {
    throw ShapeError("retrieve_hard: query length " + std::to_string(query.size()) + " vs keys " +
                     keys.shape_string());
  }
  HardRetrieval out;
  out.max_index = scan_cell(keys.ptr(), keys.cols(), keys.empty() ? 0 : keys.rows(), query.data(), out.max_similarity);
  auto v = values.row(out.max_index);
  out.raw.resize(v.size());
  for (std::size_t c = 0; c < v.size(); ++c) out.raw[c] = out.max_similarity * v[c];
  return out;
}

Var retrieve(Var query, Var keys, Var values, std::span<const std::size_t> offsets, std::size_t cell_size,
             ControlTrace* trace) {
  const Tensor& q = query.value();
  const Tensor& k = keys.value();
  const Tensor& v = values.value();
  const std::size_t batch = q.rows();
  const std::size_t dk = q.cols();
  const std::size_t dv = v.cols();
  if (k.cols() != dk) throw ShapeError("retrieve: query " + q.shape_string() + " vs keys " + k.shape_string());
  if (k.rows() != v.rows()) throw ShapeError("retrieve: keys " + k.shape_string() + " vs values " + v.shape_string());
  if (offsets.size() != batch) {
    throw ShapeError("retrieve: " + std::to_string(offsets.size()) + " cells for " + std::to_string(batch) + " queries");
  }
  std::vector<std::size_t> selected(batch);
  std::vector<double> sims(batch);
  Tensor out(Tensor::Shape{batch, dv});
  for (std::size_t b = 0; b < batch; ++b) {
    if (offsets[b] + cell_size > k.rows()) throw ShapeError("retrieve: cell beyond bank rows");
    double best = 0.0;
    std::size_t arg = scan_cell(k.ptr() + offsets[b] * dk, dk, cell_size, q.ptr() + b * dk, best);
    if (trace) {
      const std::size_t replayed = trace->index(arg);
      if (replayed >= cell_size) throw ValidationError("retrieve: replayed index outside the cell");
      if (replayed != arg) best = kernels::dot(q.ptr() + b * dk, k.ptr() + (offsets[b] + replayed) * dk, dk);
      arg = replayed;
    }
    selected[b] = offsets[b] + arg;
    sims[b] = best;
    const double* vrow = v.ptr() + selected[b] * dv;
    for (std::size_t c = 0; c < dv; ++c) out[b * dv + c] = best * vrow[c];
  }
  return query.tape().record(
      std::move(out), {query, keys, values},
      [query, keys, values, selected = std::move(selected), sims = std::move(sims), dk, dv](Tape& t, const Tensor&,
                                                                                          const Tensor& g) {
        const Tensor& q = t.value(query);
        const Tensor& k = t.value(keys);
        const Tensor& v = t.value(values);
        Tensor* gq = t.grad_target(query);
        Tensor* gk = t.grad_target(keys);
        Tensor* gv = t.grad_target(values);
        for (std::size_t b = 0; b < selected.size(); ++b) {
          const double* grow = g.ptr() + b * dv;
          const std::size_t s = selected[b];
          // d out / d sim = V_sel, and sim = q . K_sel
          const double gsim = kernels::dot(grow, v.ptr() + s * dv, dv);
          if (gq) kernels::axpy(gsim, k.ptr() + s * dk, gq->ptr() + b * dk, dk);
          if (gk) kernels::axpy(gsim, q.ptr() + b * dk, gk->ptr() + s * dk, dk);
          if (gv) kernels::axpy(sims[b], grow, gv->ptr() + s * dv, dv);
        }
      });
}

Var soft_combine(std::span<const Var> branches, std::span<const std::vector<double>> weights) {
  if (branches.empty()) throw ValidationError("soft_combine: no branches");
  if (branches.size() != weights.size()) {
    throw ShapeError("soft_combine: " + std::to_string(branches.size()) + " branches vs " +
                     std::to_string(weights.size()) + " weight sets");
  }
  Var total = ad::scale_rows(branches[0], weights[0]);
  for (std::size_t j = 1; j < branches.size(); ++j) total = ad::add(total, ad::scale_rows(branches[j], weights[j]));
  return total;
}

Bank::Bank(std::string name, BankDims dims, std::size_t cells)
    : name_(std::move(name)),
      dims_(dims),
      cells_(cells),
      mlp_(name_ + ".mlp", dims.value_dim, dims.feature_dim, dims.feature_dim) {}

void Bank::init(ParamStore& params, Rng& rng) const {
  const double bound = nn::fan_in_bound(dims_.key_dim);
  params.add(keys_name(), uniform_tensor(rng, cells_ * dims_.tuples, dims_.key_dim, bound));
  params.add(values_name(), uniform_tensor(rng, cells_ * dims_.tuples, dims_.value_dim, bound));
  mlp_.init(params, rng, nn::fan_in_bound(dims_.value_dim));
}

namespace {
Tensor cell_rows(const Tensor& all, std::size_t cell, std::size_t tuples) {
  const std::size_t cols = all.cols();
  const double* begin = all.ptr() + cell * tuples * cols;
  return Tensor::matrix(tuples, cols, std::vector<double>(begin, begin + tuples * cols));
}
}  // namespace

Tensor Bank::cell_keys(const ParamStore& params, std::size_t cell) const {
  if (cell >= cells_) throw ValidationError(name_ + ": cell " + std::to_string(cell) + " out of range");
  return cell_rows(params.value(keys_name()), cell, dims_.tuples);
}

Tensor Bank::cell_values(const ParamStore& params, std::size_t cell) const {
  if (cell >= cells_) throw ValidationError(name_ + ": cell " + std::to_string(cell) + " out of range");
  return cell_rows(params.value(values_name()), cell, dims_.tuples);
}

Var Bank::lookup(Tape& tape, Var query, std::span<const std::size_t> cells, ControlTrace* trace) const {
  std::vector<std::size_t> offsets(cells.size());
  for (std::size_t b = 0; b < cells.size(); ++b) {
    if (cells[b] >= cells_) throw ValidationError(name_ + ": cell " + std::to_string(cells[b]) + " out of range");
    offsets[b] = cells[b] * dims_.tuples;
  }
  Var raw = mb::retrieve(query, tape.param(keys_name()), tape.param(values_name()), offsets, dims_.tuples, trace);
  return mlp_(tape, raw);
}

Stab::Stab(BankDims dims, std::string name)
    : bank_(std::move(name), dims, static_cast<std::size_t>(dims.classes) * static_cast<std::size_t>(dims.classes)) {}

std::size_t Stab::cell(int past_action, int future_action) const {
  const int c = bank_.dims().classes;
  check_label(past_action, c, "STAB past-action");
  check_label(future_action, c, "STAB future-action");
  return static_cast<std::size_t>(past_action) * static_cast<std::size_t>(c) + static_cast<std::size_t>(future_action);
}

Var Stab::retrieve_hard(Tape& tape, Var query, std::span<const int> past_actions, std::span<const int> future_actions,
                        ControlTrace* trace) const {
  if (past_actions.size() != query.rows() || future_actions.size() != query.rows()) {
    throw ShapeError("STAB: label count does not match query rows");
  }
  std::vector<std::size_t> cells(query.rows());
  for (std::size_t b = 0; b < cells.size(); ++b) cells[b] = cell(past_actions[b], future_actions[b]);
  return bank_.lookup(tape, query, cells, trace);
}

Var Stab::retrieve_soft(Tape& tape, Var query, std::span<const TopK> hypotheses, std::span<const int> future_actions,
                        ControlTrace* trace) const {
  const std::size_t batch = query.rows();
  if (hypotheses.size() != batch || future_actions.size() != batch) {
    throw ShapeError("STAB: hypothesis count does not match query rows");
  }
  const std::size_t k = hypotheses[0].labels.size();
  for (const TopK& h : hypotheses) {
    if (h.labels.size() != k || h.weights.size() != k || k == 0) {
      throw ValidationError("STAB: every row needs the same non-zero number of hypotheses");
    }
  }
  std::vector<Var> branches;
  std::vector<std::vector<double>> weights(k, std::vector<double>(batch));
  std::vector<std::size_t> cells(batch);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t b = 0; b < batch; ++b) {
      cells[b] = cell(hypotheses[b].labels[j], future_actions[b]);
      weights[j][b] = hypotheses[b].weights[j];
    }
    branches.push_back(bank_.lookup(tape, query, cells, trace));
  }
  return soft_combine(branches, weights);
}

std::vector<double> Stab::retrieve_soft(const ParamStore& params, std::span<const double> query,
                                        const TopK& hypotheses, int future_action) const {
  Tape tape(params, false);
  return first_row(retrieve_soft(tape, tape.constant(one_row(query)), std::span<const TopK>(&hypotheses, 1),
                                 std::span<const int>(&future_action, 1)));
}

std::vector<double> Stab::retrieve_hard(const ParamStore& params, std::span<const double> query, int past_action,
                                        int future_action) const {
  Tape tape(params, false);
  return first_row(retrieve_hard(tape, tape.constant(one_row(query)), std::span<const int>(&past_action, 1),
                                 std::span<const int>(&future_action, 1)));
}

Acb::Acb(BankDims dims, std::string name) : bank_(std::move(name), dims, static_cast<std::size_t>(dims.classes)) {}

std::size_t Acb::cell(int future_action) const {
  check_label(future_action, bank_.dims().classes, "ACB future-action");
  return static_cast<std::size_t>(future_action);
}

Var Acb::retrieve(Tape& tape, Var query, std::span<const int> future_actions, ControlTrace* trace) const {
  if (future_actions.size() != query.rows()) throw ShapeError("ACB: label count does not match query rows");
  std::vector<std::size_t> cells(query.rows());
  for (std::size_t b = 0; b < cells.size(); ++b) cells[b] = cell(future_actions[b]);
  return bank_.lookup(tape, query, cells, trace);
}

std::vector<double> Acb::retrieve(const ParamStore& params, std::span<const double> query, int future_action) const {
  Tape tape(params, false);
  return first_row(retrieve(tape, tape.constant(one_row(query)), std::span<const int>(&future_action, 1)));
}

QueryProjection::QueryProjection(std::string name, std::size_t context_dim, std::size_t state_dim, int classes,
                                 std::size_t hidden, std::size_t key_dim)
    : mlp_(name, context_dim + state_dim + static_cast<std::size_t>(classes), hidden, key_dim), key_dim_(key_dim) {}

void QueryProjection::init(ParamStore& params, Rng& rng) const {
  mlp_.init(params, rng, nn::fan_in_bound(mlp_.hidden.in));
}

Var QueryProjection::operator()(Tape& tape, Var past_code, Var decoder_state, Var action) const {
  return mlp_(tape, ad::concat({past_code, decoder_state, action}));
}

}  // namespace mb
