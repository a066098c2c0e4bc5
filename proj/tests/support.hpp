#pragma once
// Helpers shared by the unit and acceptance tests.

#include <cmath>
#include <vector>

#include "motionbank/config.hpp"
#include "motionbank/motion.hpp"
#include "motionbank/rng.hpp"
#include "motionbank/tensor.hpp"

namespace mbtest {

inline mb::Tensor random_matrix(mb::Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return mb::Tensor::matrix(rows, cols, std::move(v));
}

inline std::vector<double> random_vector(mb::Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return v;
}

inline mb::MotionSequence random_motion(mb::Rng& rng, std::size_t length, std::size_t dim) {
  return mb::MotionSequence(dim, random_vector(rng, length * dim));
}

// Small dimensions so finite differences over every parameter stay cheap.
inline mb::Config toy_config() {
  mb::Config c;
  c.pose_dim = 2;
  c.num_classes = 3;
  c.past_frames = 3;
  c.future_frames = 4;
  c.train_per_class = 2;
  c.test_per_class = 1;
  c.transition_frames = 1;
  c.arm_hidden = 3;
  c.arm_head_hidden = 3;
  c.tau_cls = 1;
  c.latent_dim = 2;
  c.cvae_hidden = 3;
  c.stab_tuples = 2;
  c.acb_tuples = 2;
  c.key_dim = 2;
  c.value_dim = 2;
  c.feature_dim = 2;
  c.query_hidden = 3;
  c.top_k = 2;
  c.tau_aaa = 1;
  c.batch_size = 4;
  c.epochs_arm = 2;
  c.epochs_mpm = 2;
  c.lr_decay_start_arm = 1;
  c.lr_decay_start_mpm = 1;
  c.samples = 3;
  return c;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mbtest
