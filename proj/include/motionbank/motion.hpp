#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mb {

// Time-ordered poses of a fixed dimension, stored frame-major.
class MotionSequence {
 public:
  MotionSequence() = default;
  // `flat` holds length * dim values; dim must be positive.
  MotionSequence(std::size_t dim, std::vector<double> flat);
  static MotionSequence from_frames(const std::vector<std::vector<double>>& frames);

  std::size_t length() const { return dim_ == 0 ? 0 : flat_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return flat_.empty(); }

  std::span<const double> frame(std::size_t t) const { return {flat_.data() + t * dim_, dim_}; }
  std::span<double> frame(std::size_t t) { return {flat_.data() + t * dim_, dim_}; }
  const std::vector<double>& flat() const { return flat_; }

  void append(std::span<const double> frame);
  MotionSequence prefix(std::size_t count) const;

  bool operator==(const MotionSequence&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> flat_;
};

struct ActionLabel {
  int index = 0;
  int classes = 1;
};

struct LabeledSample {
  MotionSequence past;
  MotionSequence future;
  int past_action = 0;
  int future_action = 0;

  bool operator==(const LabeledSample&) const = default;
};

std::vector<double> one_hot(ActionLabel label);

// Keeps frames 0, ratio, 2*ratio, ...
MotionSequence downsample(const MotionSequence& seq, int ratio);

// Checks LabeledSample invariants plus agreement with the expected pose
// dimension and class count; throws ValidationError naming the sample index.
void validate_samples(std::span<const LabeledSample> samples, std::size_t pose_dim, int classes);

}  // namespace mb
