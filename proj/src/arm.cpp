#include "motionbank/arm.hpp"

#include <algorithm>
#include <numeric>

#include "motionbank/batching.hpp"
#include "motionbank/errors.hpp"
#include "motionbank/rng.hpp"

namespace mb {

Arm::Arm(ArmDims dims, std::string prefix)
    : dims_(dims),
      prefix_(std::move(prefix)),
      gru_{prefix_ + ".gru", dims.pose_dim, dims.hidden},
      head_(prefix_ + ".head", dims.hidden, dims.head_hidden, static_cast<std::size_t>(dims.classes)) {}

void Arm::init(ParamStore& params, Rng& rng) const {
  const double bound = nn::fan_in_bound(dims_.hidden);
  gru_.init(params, rng, bound);
  head_.init(params, rng, bound);
}

void Arm::check_dim(std::size_t dim) const {
  if (dim != dims_.pose_dim) {
    throw ShapeError("ARM expects pose dimension " + std::to_string(dims_.pose_dim) + ", got " + std::to_string(dim));
  }
}

Arm::Trace Arm::run(Tape& tape, std::span<const Var> frames) const {
  if (frames.empty()) throw ValidationError("ARM needs at least one frame");
  check_dim(frames[0].cols());
  Trace trace;
  Var h = zero_state(tape, frames[0].rows());
  for (const Var& f : frames) {
    h = step(tape, f, h);
    trace.probs.push_back(probs(tape, h));
  }
  trace.final_hidden = h;
  return trace;
}

Var Arm::loss(Tape& tape, std::span<const Var> frames, std::span<const int> labels, std::size_t tau) const {
  for (int l : labels) {
    if (l < 0 || l >= dims_.classes) {
      throw ValidationError("ARM label " + std::to_string(l) + " outside [0, " + std::to_string(dims_.classes) + ")");
    }
  }
  if (tau >= frames.size()) {
    log_warning("ARM loss threshold " + std::to_string(tau) + " >= sequence length " + std::to_string(frames.size()) +
                "; loss is 0");
    return tape.constant(Tensor::scalar(0.0));
  }
  Trace trace = run(tape, frames);
  std::vector<Var> terms;
  for (std::size_t t = tau; t < frames.size(); ++t) terms.push_back(ad::cross_entropy(trace.probs[t], labels));
  Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = ad::add(total, terms[i]);
  return ad::scale(total, 1.0 / static_cast<double>(terms.size()));
}

std::vector<ClassifierOutput> Arm::forward_batch(const ParamStore& params, std::span<const MotionSequence> seqs) const {
  if (seqs.empty()) return {};
  std::vector<const MotionSequence*> ptrs;
  for (const auto& s : seqs) {
    if (s.empty()) throw ValidationError("ARM input sequence is empty");
    check_dim(s.dim());
    ptrs.push_back(&s);
  }
  Tape tape(params, false);
  const std::vector<Var> frames = constant_frames(tape, ptrs);
  Trace trace = run(tape, frames);
  const std::size_t C = static_cast<std::size_t>(dims_.classes);
  std::vector<ClassifierOutput> out(seqs.size());
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    ClassifierOutput& o = out[b];
    o.per_frame_probs = Tensor::zeros(frames.size(), C);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      auto row = trace.probs[t].value().row(b);
      std::copy(row.begin(), row.end(), o.per_frame_probs.ptr() + t * C);
    }
    auto last = o.per_frame_probs.row(frames.size() - 1);
    o.final_probs.assign(last.begin(), last.end());
    auto feat = trace.final_hidden.value().row(b);
    o.features.assign(feat.begin(), feat.end());
  }
  return out;
}

ClassifierOutput Arm::forward(const ParamStore& params, const MotionSequence& seq) const {
  return std::move(forward_batch(params, std::span<const MotionSequence>(&seq, 1)).front());
}

double arm_loss(const Arm& arm, const ParamStore& params, const MotionSequence& seq, int label, std::size_t tau) {
  if (seq.empty()) throw ValidationError("ARM input sequence is empty");
  Tape tape(params, false);
  const MotionSequence* ptr = &seq;
  const std::vector<Var> frames = constant_frames(tape, std::span<const MotionSequence* const>(&ptr, 1));
  const int labels[] = {label};
  return arm.loss(tape, frames, labels, tau).value().item();
}

TopK arm_topk(std::span<const double> probs, std::size_t k) {
  if (k < 1 || k > probs.size()) {
    throw ValidationError("top-k: k=" + std::to_string(k) + " outside [1, " + std::to_string(probs.size()) + "]");
  }
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] > probs[b]; });
  TopK out;
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    out.labels.push_back(order[j]);
    total += probs[order[j]];
  }
  for (std::size_t j = 0; j < k; ++j) {
    out.weights.push_back(total > 0.0 ? probs[order[j]] / total : 1.0 / static_cast<double>(k));
  }
  return out;
}

}  // namespace mb
