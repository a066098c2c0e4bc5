#include "motionbank/batching.hpp"

#include <algorithm>

#include "motionbank/errors.hpp"

namespace mb {

std::vector<Tensor> time_major(std::span<const MotionSequence* const> seqs) {
  if (seqs.empty()) throw ValidationError("time_major: empty batch");
  const std::size_t length = seqs[0]->length(), dim = seqs[0]->dim();
  for (const MotionSequence* s : seqs) {
    if (s->length() != length || s->dim() != dim) {
      throw ShapeError("time_major: batch sequences must share length and pose dimension");
    }
  }
  std::vector<Tensor> out;
  out.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    Tensor f = Tensor::zeros(seqs.size(), dim);
    for (std::size_t b = 0; b < seqs.size(); ++b) {
      auto src = seqs[b]->frame(t);
      std::copy(src.begin(), src.end(), f.ptr() + b * dim);
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Var> constant_frames(Tape& tape, std::span<const MotionSequence* const> seqs) {
  std::vector<Var> out;
  for (Tensor& t : time_major(seqs)) out.push_back(tape.constant(std::move(t)));
  return out;
}

std::vector<MotionSequence> batch_to_sequences(std::span<const Tensor> frames) {
  if (frames.empty()) return {};
  const std::size_t batch = frames[0].rows(), dim = frames[0].cols();
  std::vector<MotionSequence> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<double> flat;
    flat.reserve(frames.size() * dim);
    for (const Tensor& f : frames) {
      auto row = f.row(b);
      flat.insert(flat.end(), row.begin(), row.end());
    }
    out[b] = MotionSequence(dim, std::move(flat));
  }
  return out;
}

Tensor repeat_rows(std::span<const double> row, std::size_t count) {
  Tensor t = Tensor::zeros(count, row.size());
  for (std::size_t r = 0; r < count; ++r) std::copy(row.begin(), row.end(), t.ptr() + r * row.size());
  return t;
}

Tensor one_hot_rows(std::span<const int> labels, int classes) {
  Tensor t = Tensor::zeros(labels.size(), static_cast<std::size_t>(classes));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || labels[r] >= classes) {
      throw ValidationError("label " + std::to_string(labels[r]) + " outside [0, " + std::to_string(classes) + ")");
    }
    t.at(r, static_cast<std::size_t>(labels[r])) = 1.0;
  }
  return t;
}

}  // namespace mb
