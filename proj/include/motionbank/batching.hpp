#pragma once

#include <span>
#include <vector>

#include "motionbank/autodiff.hpp"
#include "motionbank/motion.hpp"

namespace mb {

// Stacks equal-length sequences into one (batch x dim) tensor per time step.
std::vector<Tensor> time_major(std::span<const MotionSequence* const> seqs);
std::vector<Var> constant_frames(Tape& tape, std::span<const MotionSequence* const> seqs);

// Inverse of time_major: one sequence per batch row.
std::vector<MotionSequence> batch_to_sequences(std::span<const Tensor> frames);

Tensor repeat_rows(std::span<const double> row, std::size_t count);
Tensor one_hot_rows(std::span<const int> labels, int classes);

}  // namespace mb
