#include "motionbank/motion.hpp"

#include <cmath>
#include <string>

#include "motionbank/errors.hpp"

namespace mb {

MotionSequence::MotionSequence(std::size_t dim, std::vector<double> flat) : dim_(dim), flat_(std::move(flat)) {
  if (dim_ == 0) throw ValidationError("motion sequence pose dimension must be positive");
  if (flat_.size() % dim_ != 0) {
    throw ShapeError("motion sequence: " + std::to_string(flat_.size()) + " values is not a multiple of pose dim " +
                     std::to_string(dim_));
  }
  for (double v : flat_) {
    if (!std::isfinite(v)) throw ValidationError("motion sequence contains NaN or Inf");
  }
}

MotionSequence MotionSequence::from_frames(const std::vector<std::vector<double>>& frames) {
  if (frames.empty()) throw ValidationError("motion sequence needs at least one frame");
  const std::size_t dim = frames.front().size();
  std::vector<double> flat;
  flat.reserve(frames.size() * dim);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != dim) {
      throw ShapeError("frame " + std::to_string(t) + " has dimension " + std::to_string(frames[t].size()) +
                       ", expected " + std::to_string(dim));
    }
    flat.insert(flat.end(), frames[t].begin(), frames[t].end());
  }
  return MotionSequence(dim, std::move(flat));
}

void MotionSequence::append(std::span<const double> frame) {
  if (dim_ == 0) dim_ = frame.size();
  if (frame.size() != dim_ || dim_ == 0) {
    throw ShapeError("append: frame dimension " + std::to_string(frame.size()) + " != " + std::to_string(dim_));
  }
  flat_.insert(flat_.end(), frame.begin(), frame.end());
}

MotionSequence MotionSequence::prefix(std::size_t count) const {
  if (count == 0 || count > length()) throw ValidationError("prefix length out of range");
  return MotionSequence(dim_, std::vector<double>(flat_.begin(), flat_.begin() + count * dim_));
}

std::vector<double> one_hot(ActionLabel label) {
  if (label.classes < 1 || label.index < 0 || label.index >= label.classes) {
    throw ValidationError("action label " + std::to_string(label.index) + " outside [0, " +
                          std::to_string(label.classes) + ")");
  }
  std::vector<double> v(static_cast<std::size_t>(label.classes), 0.0);
  v[static_cast<std::size_t>(label.index)] = 1.0;
  return v;
}

MotionSequence downsample(const MotionSequence& seq, int ratio) {
  if (ratio < 1) throw ValidationError("downsample ratio must be >= 1, got " + std::to_string(ratio));
  MotionSequence out;
  for (std::size_t t = 0; t < seq.length(); t += static_cast<std::size_t>(ratio)) out.append(seq.frame(t));
  return out;
}

void validate_samples(std::span<const LabeledSample> samples, std::size_t pose_dim, int classes) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LabeledSample& s = samples[i];
    const std::string where = "sample " + std::to_string(i) + ": ";
    if (s.past.empty() || s.future.empty()) throw ValidationError(where + "past and future need at least one frame");
    if (s.past.dim() != pose_dim || s.future.dim() != pose_dim) {
      throw ShapeError(where + "pose dimension " + std::to_string(s.past.dim()) + "/" +
                       std::to_string(s.future.dim()) + " does not match configured " + std::to_string(pose_dim));
    }
    for (int a : {s.past_action, s.future_action}) {
      if (a < 0 || a >= classes) {
        throw ValidationError(where + "action " + std::to_string(a) + " outside [0, " + std::to_string(classes) + ")");
      }
    }
  }
}

}  // namespace mb
