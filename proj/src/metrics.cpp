#include "motionbank/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>

#include "motionbank/errors.hpp"
#include "motionbank/kernels.hpp"

namespace mb {

namespace {

constexpr double kEigenTolerance = 1e-8;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix to_eigen(const Tensor& t) {
  return Eigen::Map<const Matrix>(t.ptr(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

Eigen::VectorXd checked_eigenvalues(const Eigen::SelfAdjointEigenSolver<Matrix>& solver, const char* what) {
  if (solver.info() != Eigen::Success) throw std::runtime_error(std::string("fid: eigensolver failed on ") + what);
  Eigen::VectorXd values = solver.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] < -kEigenTolerance) {
      throw ValidationError(std::string("fid: ") + what + " is not positive semidefinite (eigenvalue " +
                            std::to_string(values[i]) + ")");
    }
    values[i] = std::max(values[i], 0.0);
  }
  return values;
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index writes
// only its own slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += jobs) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

std::vector<std::pair<std::size_t, std::size_t>> all_pairs(std::size_t g) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

void check_samples(std::span<const MotionSequence> samples, const char* what) {
  if (samples.size() < 2) {
    throw ValidationError(std::string(what) + " needs at least 2 samples, got " + std::to_string(samples.size()));
  }
  for (const auto& s : samples) {
    if (s.dim() != samples[0].dim()) throw ShapeError(std::string(what) + ": samples differ in pose dimension");
  }
}

double pair_weighted_mean(const std::vector<double>& per_pair, std::size_t g) {
  double total = 0.0;
  for (double v : per_pair) total += v;
  return 2.0 * total / (static_cast<double>(g) * static_cast<double>(g - 1));
}

}  // namespace

MomentStats moment_stats(std::span<const std::vector<double>> features) {
  if (features.size() < 2) throw ValidationError("moment_stats needs at least 2 feature vectors");
  const std::size_t d = features[0].size();
  if (d == 0) throw ValidationError("moment_stats: empty feature vectors");
  MomentStats s;
  s.count = features.size();
  s.mean.assign(d, 0.0);
  for (const auto& f : features) {
    if (f.size() != d) throw ShapeError("moment_stats: feature sizes differ");
    for (std::size_t i = 0; i < d; ++i) s.mean[i] += f[i];
  }
  for (double& m : s.mean) m /= static_cast<double>(s.count);
  s.covariance = Tensor::zeros(d, d);
  for (const auto& f : features) {
    for (std::size_t i = 0; i < d; ++i) {
      const double di = f[i] - s.mean[i];
      for (std::size_t j = i; j < d; ++j) s.covariance.at(i, j) += di * (f[j] - s.mean[j]);
    }
  }
  const double denom = static_cast<double>(s.count - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      s.covariance.at(i, j) /= denom;
      s.covariance.at(j, i) = s.covariance.at(i, j);
    }
  }
  return s;
}

double fid(const MomentStats& gen, const MomentStats& ref) {
  const std::size_t d = gen.mean.size();
  if (ref.mean.size() != d || gen.covariance.rows() != d || ref.covariance.rows() != d || gen.covariance.cols() != d ||
      ref.covariance.cols() != d) {
    throw ShapeError("fid: feature dimension mismatch (" + std::to_string(d) + " vs " + std::to_string(ref.mean.size()) +
                     ")");
  }
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean_term += (gen.mean[i] - ref.mean[i]) * (gen.mean[i] - ref.mean[i]);

  const Matrix sg = to_eigen(gen.covariance);
  const Matrix sr = to_eigen(ref.covariance);
  Eigen::SelfAdjointEigenSolver<Matrix> ref_solver(sr);
  const Eigen::VectorXd ref_eig = checked_eigenvalues(ref_solver, "reference covariance");
  const Matrix root = ref_solver.eigenvectors() * ref_eig.cwiseSqrt().asDiagonal() * ref_solver.eigenvectors().transpose();
  Matrix product = root * sg * root;
  product = 0.5 * (product + product.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(product, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd eig = checked_eigenvalues(solver, "covariance product");
  const double trace_sqrt = eig.cwiseSqrt().sum();
  return mean_term + sg.trace() + sr.trace() - 2.0 * trace_sqrt;
}

std::vector<double> extract_features(const Arm& arm, const ParamStore& params, const MotionSequence& seq) {
  return arm.forward(params, seq).features;
}

namespace {
// Groups indices by sequence length so each group runs as one batch.
template <typename Fn>
void for_length_groups(std::span<const MotionSequence> seqs, Fn fn) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < seqs.size(); ++i) groups[seqs[i].length()].push_back(i);
  for (const auto& [len, idx] : groups) {
    (void)len;
    std::vector<MotionSequence> batch;
    batch.reserve(idx.size());
    for (std::size_t i : idx) batch.push_back(seqs[i]);
    fn(idx, batch);
  }
}
}  // namespace

std::vector<std::vector<double>> extract_features(const Arm& arm, const ParamStore& params,
                                                  std::span<const MotionSequence> seqs) {
  std::vector<std::vector<double>> out(seqs.size());
  for_length_groups(seqs, [&](const std::vector<std::size_t>& idx, const std::vector<MotionSequence>& batch) {
    auto outputs = arm.forward_batch(params, batch);
    for (std::size_t n = 0; n < idx.size(); ++n) out[idx[n]] = std::move(outputs[n].features);
  });
  return out;
}

std::vector<int> classify(const Arm& arm, const ParamStore& params, std::span<const MotionSequence> seqs) {
  std::vector<int> out(seqs.size());
  for_length_groups(seqs, [&](const std::vector<std::size_t>& idx, const std::vector<MotionSequence>& batch) {
    const auto outputs = arm.forward_batch(params, batch);
    for (std::size_t n = 0; n < idx.size(); ++n) {
      const auto& p = outputs[n].final_probs;
      out[idx[n]] = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
  });
  return out;
}

double recognition_accuracy(const Arm& arm, const ParamStore& params, std::span<const MotionSequence> seqs,
                            std::span<const int> labels) {
  if (seqs.empty()) throw ValidationError("recognition_accuracy: empty sample set");
  if (seqs.size() != labels.size()) throw ShapeError("recognition_accuracy: label count mismatch");
  const std::vector<int> predicted = classify(arm, params, seqs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(seqs.size());
}

DtwResult dtw_align(const MotionSequence& a, const MotionSequence& b) {
  if (a.empty() || b.empty()) throw ValidationError("dtw_align: empty sequence");
  if (a.dim() != b.dim()) {
    throw ShapeError("dtw_align: pose dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
  const std::size_t n = a.length();
  const std::size_t m = b.length();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(n * m, inf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * m + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double cost = std::sqrt(kernels::sqdist(a.frame(i).data(), b.frame(j).data(), a.dim()));
      if (i == 0 && j == 0) {
        at(i, j) = cost;
        continue;
      }
      double best = inf;
      if (i > 0 && j > 0) best = at(i - 1, j - 1);
      if (i > 0) best = std::min(best, at(i - 1, j));
      if (j > 0) best = std::min(best, at(i, j - 1));
      at(i, j) = best + cost;
    }
  }
  DtwResult out;
  out.cost = at(n - 1, m - 1);
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  out.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i, --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    out.path.emplace_back(i, j);
  }
  std::reverse(out.path.begin(), out.path.end());
  out.aligned_a = MotionSequence(a.dim(), {});
  out.aligned_b = MotionSequence(b.dim(), {});
  for (const auto& [pi, pj] : out.path) {
    out.aligned_a.append(a.frame(pi));
    out.aligned_b.append(b.frame(pj));
  }
  return out;
}

double diversity(std::span<const MotionSequence> samples, std::size_t t_max, std::size_t jobs) {
  check_samples(samples, "diversity");
  if (t_max < 1) throw ValidationError("diversity: T_max must be >= 1");
  for (const auto& s : samples) {
    if (s.length() < t_max) {
      throw ValidationError("diversity: sample of length " + std::to_string(s.length()) + " shorter than T_max " +
                            std::to_string(t_max));
    }
  }
  const auto pairs = all_pairs(samples.size());
  std::vector<double> per_pair(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const auto& a = samples[pairs[p].first];
    const auto& b = samples[pairs[p].second];
    double total = 0.0;
    for (std::size_t v = 0; v < t_max; ++v) total += std::sqrt(kernels::sqdist(a.frame(v).data(), b.frame(v).data(), a.dim()));
    per_pair[p] = total / static_cast<double>(t_max);
  });
  return pair_weighted_mean(per_pair, samples.size());
}

double diversity_warped(std::span<const MotionSequence> samples, std::size_t jobs) {
  check_samples(samples, "diversity_warped");
  for (const auto& s : samples) {
    if (s.empty()) throw ValidationError("diversity_warped: empty sample");
  }
  const auto pairs = all_pairs(samples.size());
  std::vector<double> per_pair(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t p) {
    const DtwResult r = dtw_align(samples[pairs[p].first], samples[pairs[p].second]);
    double total = 0.0;
    for (std::size_t v = 0; v < r.path.size(); ++v) {
      total += std::sqrt(kernels::sqdist(r.aligned_a.frame(v).data(), r.aligned_b.frame(v).data(), r.aligned_a.dim()));
    }
    per_pair[p] = total / static_cast<double>(r.path.size());
  });
  return pair_weighted_mean(per_pair, samples.size());
}

}  // namespace mb
