#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "motionbank/motion.hpp"

namespace mb {

// JSON Lines, one sample per line:
//   {"past": [[...K...], ...], "future": [[...], ...], "past_action": int, "future_action": int}
void save_dataset(std::span<const LabeledSample> samples, const std::filesystem::path& path);
void write_dataset(std::span<const LabeledSample> samples, std::ostream& out);

// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<LabeledSample> load_dataset(const std::filesystem::path& path);
std::vector<LabeledSample> read_dataset(std::istream& in);

// One row per frame: sample,frame,x0,...,x{K-1}
void write_motions_csv(std::span<const MotionSequence> motions, std::ostream& out);

}  // namespace mb
