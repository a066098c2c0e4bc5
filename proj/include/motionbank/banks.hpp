#pragma once
// Retrieval memories. A bank is a grid of cells, each holding a fixed number
// of learnable (key, value) tuples. Retrieval picks the tuple whose key has
// the largest raw dot product with the query, scales its value by that
// similarity and maps the result through the bank's output MLP.
//
// STAB cells are indexed by (past action, future action); ACB cells by the
// future action alone. All tuples of a bank live in one keys matrix and one
// values matrix, cell after cell.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionbank/autodiff.hpp"
#include "motionbank/layers.hpp"

namespace mb {

class Rng;
class ControlTrace;
struct TopK;

struct HardRetrieval {
  double max_similarity = 0.0;
  std::size_t max_index = 0;
  std::vector<double> raw;  // max_similarity * values[max_index]
};

// Exhaustive scan of one cell; ties go to the lowest index.
HardRetrieval retrieve_hard(const Tensor& keys, const Tensor& values, std::span<const double> query);

// Batched differentiable form. Row b of `query` searches rows
// [offsets[b], offsets[b] + cell_size) of keys/values. Gradients reach the
// query, the selected key and the selected value only. When `trace` is set
// each chosen index is recorded or replayed through it.
Var retrieve(Var query, Var keys, Var values, std::span<const std::size_t> offsets, std::size_t cell_size,
             ControlTrace* trace = nullptr);

// sum_j weights[j][b] * branches[j][b, :]; weights per branch are per-row.
Var soft_combine(std::span<const Var> branches, std::span<const std::vector<double>> weights);

struct BankDims {
  int classes = 4;
  std::size_t tuples = 8;
  std::size_t key_dim = 32;
  std::size_t value_dim = 32;
  std::size_t feature_dim = 32;
};

class Bank {
 public:
  // `cells` is C*C for STAB and C for ACB.
  Bank(std::string name, BankDims dims, std::size_t cells);

  const std::string& name() const { return name_; }
  const BankDims& dims() const { return dims_; }
  std::size_t cells() const { return cells_; }
  std::string keys_name() const { return name_ + ".keys"; }
  std::string values_name() const { return name_ + ".values"; }

  // Keys/values uniform(-1/sqrt(d_k), 1/sqrt(d_k)).
  void init(ParamStore& params, Rng& rng) const;

  Tensor cell_keys(const ParamStore& params, std::size_t cell) const;
  Tensor cell_values(const ParamStore& params, std::size_t cell) const;

  // Retrieval + output MLP for one cell per batch row.
  Var lookup(Tape& tape, Var query, std::span<const std::size_t> cells, ControlTrace* trace = nullptr) const;

 private:
  std::string name_;
  BankDims dims_;
  std::size_t cells_;
  nn::Mlp mlp_;
};

class Stab {
 public:
  explicit Stab(BankDims dims, std::string name = "stab");
  const Bank& bank() const { return bank_; }
  void init(ParamStore& params, Rng& rng) const { bank_.init(params, rng); }
  std::size_t cell(int past_action, int future_action) const;

  // Single recognized past action per row (hard search).
  Var retrieve_hard(Tape& tape, Var query, std::span<const int> past_actions, std::span<const int> future_actions,
                    ControlTrace* trace = nullptr) const;
  // Soft search over each row's top-k past-action hypotheses.
  Var retrieve_soft(Tape& tape, Var query, std::span<const TopK> hypotheses, std::span<const int> future_actions,
                    ControlTrace* trace = nullptr) const;

  std::vector<double> retrieve_soft(const ParamStore& params, std::span<const double> query, const TopK& hypotheses,
                                    int future_action) const;
  std::vector<double> retrieve_hard(const ParamStore& params, std::span<const double> query, int past_action,
                                    int future_action) const;

 private:
  Bank bank_;
};

class Acb {
 public:
  explicit Acb(BankDims dims, std::string name = "acb");
  const Bank& bank() const { return bank_; }
  void init(ParamStore& params, Rng& rng) const { bank_.init(params, rng); }
  std::size_t cell(int future_action) const;

  Var retrieve(Tape& tape, Var query, std::span<const int> future_actions, ControlTrace* trace = nullptr) const;
  std::vector<double> retrieve(const ParamStore& params, std::span<const double> query, int future_action) const;

 private:
  Bank bank_;
};

// Query MLP over [past_code | decoder state | one_hot(a_f)] -> d_k.
class QueryProjection {
 public:
  QueryProjection(std::string name, std::size_t context_dim, std::size_t state_dim, int classes, std::size_t hidden,
                  std::size_t key_dim);
  void init(ParamStore& params, Rng& rng) const;
  Var operator()(Tape& tape, Var past_code, Var decoder_state, Var action) const;
  std::size_t key_dim() const { return key_dim_; }

 private:
  nn::Mlp mlp_;
  std::size_t key_dim_;
};

}  // namespace mb
