#include "motionbank/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "motionbank/errors.hpp"
#include "motionbank/rng.hpp"

namespace mb {
namespace {

// Reference length for drift; drift coefficients are per this many frames.
constexpr double kDriftSpan = 25.0;

}  // namespace

void validate(const SyntheticSpec& spec) {
  if (spec.classes < 1) throw ValidationError("synthetic spec: classes must be positive");
  if (spec.pose_dim == 0 || spec.per_class == 0 || spec.past_frames == 0 || spec.future_frames == 0) {
    throw ValidationError("synthetic spec: counts must be positive");
  }
  if (!(spec.noise >= 0.0)) throw ValidationError("synthetic spec: noise scale must be >= 0");
  if (!(spec.time_jitter >= 0.0) || !(spec.amplitude_jitter >= 0.0) || spec.amplitude_jitter >= 1.0) {
    throw ValidationError("synthetic spec: jitter must be >= 0 (amplitude jitter < 1)");
  }
}

std::vector<ClassPattern> class_patterns(int classes, std::size_t pose_dim, std::uint64_t pattern_seed) {
  Rng rng(mix_seed(pattern_seed, "class-patterns"));
  std::vector<ClassPattern> out(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    ClassPattern& p = out[static_cast<std::size_t>(c)];
    const double period = 8.0 + 5.0 * c + rng.uniform(0.0, 2.0);
    p.angular_freq = 2.0 * std::numbers::pi / period;
    p.amplitude = rng.uniform(0.6, 1.2);
    p.phase.resize(pose_dim);
    p.drift.resize(pose_dim);
    for (std::size_t k = 0; k < pose_dim; ++k) {
      p.phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      p.drift[k] = rng.uniform(-0.5, 0.5);
    }
    if (c % 2 == 1) {
      const ClassPattern& twin = out[static_cast<std::size_t>(c - 1)];
      for (std::size_t k = 0; k < pose_dim / 2; ++k) p.phase[k] = twin.phase[k];
    }
  }
  return out;
}

void pattern_frame(const ClassPattern& pattern, double t, double time_offset, double amp_scale,
                   std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = pattern.amplitude * amp_scale * std::sin(pattern.angular_freq * (t + time_offset) + pattern.phase[k]) +
             pattern.drift[k] * t / kDriftSpan;
  }
}

std::vector<LabeledSample> generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const auto patterns = class_patterns(spec.classes, spec.pose_dim, spec.pattern_seed);
  const std::size_t C = static_cast<std::size_t>(spec.classes);
  const std::size_t K = spec.pose_dim;
  const std::size_t total = C * spec.per_class;

  std::vector<LabeledSample> samples;
  samples.reserve(total);
  std::vector<double> frame(K), prev(K);
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng(mix_seed(spec.seed, i));
    LabeledSample s;
    s.future_action = static_cast<int>(i % C);
    s.past_action = C == 1 ? 0 : static_cast<int>((i % C + 1 + (i / C) % (C - 1)) % C);
    const ClassPattern& past_p = patterns[static_cast<std::size_t>(s.past_action)];
    const ClassPattern& fut_p = patterns[static_cast<std::size_t>(s.future_action)];
    const double past_offset = rng.uniform(0.0, spec.time_jitter);
    const double past_amp = rng.uniform(1.0 - spec.amplitude_jitter, 1.0 + spec.amplitude_jitter);
    const double fut_offset = rng.uniform(0.0, spec.time_jitter);
    const double fut_amp = rng.uniform(1.0 - spec.amplitude_jitter, 1.0 + spec.amplitude_jitter);

    std::vector<double> past_flat;
    past_flat.reserve(spec.past_frames * K);
    for (std::size_t t = 0; t < spec.past_frames; ++t) {
      pattern_frame(past_p, static_cast<double>(t), past_offset, past_amp, frame);
      past_flat.insert(past_flat.end(), frame.begin(), frame.end());
    }
    std::vector<double> fut_flat;
    fut_flat.reserve(spec.future_frames * K);
    for (std::size_t t = 0; t < spec.future_frames; ++t) {
      pattern_frame(fut_p, static_cast<double>(t), fut_offset, fut_amp, frame);
      if (t < spec.transition_frames) {
        pattern_frame(past_p, static_cast<double>(spec.past_frames + t), past_offset, past_amp, prev);
        const double w = static_cast<double>(t + 1) / static_cast<double>(spec.transition_frames + 1);
        for (std::size_t k = 0; k < K; ++k) frame[k] = (1.0 - w) * prev[k] + w * frame[k];
      }
      fut_flat.insert(fut_flat.end(), frame.begin(), frame.end());
    }
    if (spec.noise > 0.0) {
      for (double& v : past_flat) v += spec.noise * rng.normal();
      for (double& v : fut_flat) v += spec.noise * rng.normal();
    }
    s.past = MotionSequence(K, std::move(past_flat));
    s.future = MotionSequence(K, std::move(fut_flat));
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace mb
