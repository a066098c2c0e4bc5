#pragma once

#include <cstdint>
#include <vector>

#include "motionbank/motion.hpp"

namespace mb {

// Procedural stand-in for labeled motion-capture data. Every action class is
// a fixed pattern: a per-coordinate sinusoid with class-specific frequency,
// amplitude and phases plus a class-specific linear drift. Odd classes share
// the phases of their even neighbour on the first half of the coordinates,
// so pairs of classes look alike in part of the pose.
struct SyntheticSpec {
  int classes = 4;
  std::size_t pose_dim = 16;
  std::size_t per_class = 100;
  std::size_t past_frames = 10;
  std::size_t future_frames = 25;
  // Frames at the start of the future that cross-fade from the past action.
  std::size_t transition_frames = 4;
  double noise = 0.05;
  // Per-sample variation: time offset uniform in [0, time_jitter) frames,
  // amplitude scale uniform in [1 - amplitude_jitter, 1 + amplitude_jitter].
  double time_jitter = 2.0;
  double amplitude_jitter = 0.1;
  std::uint64_t seed = 0;
  // Seed of the class patterns; train and test splits share it.
  std::uint64_t pattern_seed = 0;
};

struct ClassPattern {
  double angular_freq = 0.0;
  double amplitude = 1.0;
  std::vector<double> phase;
  std::vector<double> drift;
};

std::vector<ClassPattern> class_patterns(int classes, std::size_t pose_dim, std::uint64_t pattern_seed);

// Pattern value of one class at local time `t` (frames since segment start)
// with the given per-sample time offset and amplitude scale.
void pattern_frame(const ClassPattern& pattern, double t, double time_offset, double amp_scale,
                   std::span<double> out);

// per_class samples for each future action (sample i has future action
// i mod C). Past actions cycle through the other classes so every ordered
// pair of distinct classes appears equally often; with a single class the
// past action equals the future action. Pure function of its argument.
std::vector<LabeledSample> generate_synthetic(const SyntheticSpec& spec);

void validate(const SyntheticSpec& spec);

}  // namespace mb
