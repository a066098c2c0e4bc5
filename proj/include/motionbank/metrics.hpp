#pragma once
// Evaluation metrics: Frechet distance between feature moments, recognition
// accuracy under a frozen classifier, pairwise diversity with and without
// DTW alignment.

#include <span>
#include <utility>
#include <vector>

#include "motionbank/arm.hpp"
#include "motionbank/motion.hpp"
#include "motionbank/tensor.hpp"

namespace mb {

struct MomentStats {
  std::vector<double> mean;
  Tensor covariance;  // d x d, unbiased
  std::size_t count = 0;
};

// Needs at least two equally sized feature vectors.
MomentStats moment_stats(std::span<const std::vector<double>> features);

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)). The trace of the
// square root comes from the eigenvalues of S_b^(1/2) S_a S_b^(1/2).
double fid(const MomentStats& generated, const MomentStats& reference);

// Final ARM hidden state.
std::vector<double> extract_features(const Arm& arm, const ParamStore& params, const MotionSequence& seq);
// Sequences of equal length are batched together; order is preserved.
std::vector<std::vector<double>> extract_features(const Arm& arm, const ParamStore& params,
                                                  std::span<const MotionSequence> seqs);

// Fraction of sequences whose final ARM argmax equals the label.
double recognition_accuracy(const Arm& arm, const ParamStore& params, std::span<const MotionSequence> seqs,
                            std::span<const int> labels);
// Per-sequence argmax of the final class distribution.
std::vector<int> classify(const Arm& arm, const ParamStore& params, std::span<const MotionSequence> seqs);

struct DtwResult {
  std::vector<std::pair<std::size_t, std::size_t>> path;
  double cost = 0.0;
  MotionSequence aligned_a;
  MotionSequence aligned_b;
};

// Euclidean frame cost, steps (1,0), (0,1), (1,1). On backtracking ties the
// diagonal wins, then the step that advances the first sequence only.
DtwResult dtw_align(const MotionSequence& a, const MotionSequence& b);

// Mean over pairs of (1/T_max) sum_v ||a_v - b_v||.
double diversity(std::span<const MotionSequence> samples, std::size_t t_max, std::size_t jobs = 1);
// Same pair weighting, each pair DTW-aligned and averaged over its path.
double diversity_warped(std::span<const MotionSequence> samples, std::size_t jobs = 1);

}  // namespace mb
