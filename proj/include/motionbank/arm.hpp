#pragma once
// Action recognition module: one GRU layer over the frames followed by an
// MLP + softmax head applied to every hidden state, so any prefix of a
// sequence gets its own class distribution.

#include <span>
#include <string>
#include <vector>

#include "motionbank/autodiff.hpp"
#include "motionbank/layers.hpp"
#include "motionbank/motion.hpp"

namespace mb {

class Rng;

struct ArmDims {
  std::size_t pose_dim = 16;
  std::size_t hidden = 64;
  std::size_t head_hidden = 64;
  int classes = 4;
};

struct ClassifierOutput {
  Tensor per_frame_probs;  // length x C
  std::vector<double> final_probs;
  std::vector<double> features;  // final hidden state
};

struct TopK {
  std::vector<int> labels;
  std::vector<double> weights;
};

class Arm {
 public:
  explicit Arm(ArmDims dims, std::string prefix = "arm");

  const ArmDims& dims() const { return dims_; }
  const std::string& prefix() const { return prefix_; }

  // Matrices uniform(-1/sqrt(H), 1/sqrt(H)), biases zero.
  void init(ParamStore& params, Rng& rng) const;

  Var zero_state(Tape& tape, std::size_t batch) const { return gru_.zero_state(tape, batch); }
  Var step(Tape& tape, Var frame, Var h) const { return gru_.step(tape, frame, h); }
  // Softmax class probabilities (batch x C) for hidden states.
  Var probs(Tape& tape, Var h) const { return ad::softmax(head_(tape, h)); }

  struct Trace {
    std::vector<Var> probs;  // one (batch x C) entry per frame
    Var final_hidden;
  };
  // frames[t] is (batch x K).
  Trace run(Tape& tape, std::span<const Var> frames) const;

  // Mean cross-entropy over frames t >= tau (0-based) and batch rows. Zero
  // with a warning when tau >= length.
  Var loss(Tape& tape, std::span<const Var> frames, std::span<const int> labels, std::size_t tau) const;

  ClassifierOutput forward(const ParamStore& params, const MotionSequence& seq) const;
  // Sequences must share their length.
  std::vector<ClassifierOutput> forward_batch(const ParamStore& params, std::span<const MotionSequence> seqs) const;

 private:
  void check_dim(std::size_t dim) const;

  ArmDims dims_;
  std::string prefix_;
  nn::Gru gru_;
  nn::Mlp head_;
};

double arm_loss(const Arm& arm, const ParamStore& params, const MotionSequence& seq, int label, std::size_t tau);

// k largest probabilities (ties to the lower class index), renormalized.
TopK arm_topk(std::span<const double> probs, std::size_t k);

}  // namespace mb
