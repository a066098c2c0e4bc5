#pragma once
// Two-stage training (recognizer, then the motion prediction model with the
// recognizer frozen), sampling and evaluation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionbank/checkpoint.hpp"
#include "motionbank/model.hpp"
#include "motionbank/motion.hpp"

namespace mb {

struct TrainOptions {
  // Progress lines go here when set.
  std::ostream* log = nullptr;
  // Checkpoint written every config.checkpoint_interval epochs (if > 0) and
  // at the end, when non-empty.
  std::filesystem::path checkpoint_path;
  // Called after every epoch with the mean training loss.
  std::function<void(std::size_t epoch, double loss)> on_epoch;
};

Checkpoint init_arm(const Config& config, std::uint64_t seed);
// Cross-entropy over frames t >= tau_cls on every past segment (past label)
// and future segment (future label).
Checkpoint train_arm(const Config& config, std::span<const LabeledSample> data, std::uint64_t seed,
                     const TrainOptions& options = {});
// Mean ARM loss over all segments of `data`.
double arm_dataset_loss(const Checkpoint& arm, std::span<const LabeledSample> data);
// Fraction of past and future segments whose final argmax matches their label.
double arm_accuracy(const Checkpoint& arm, std::span<const LabeledSample> data);

// Fresh model parameters plus a frozen copy of the recognizer.
Checkpoint init_mpm(const Config& config, const Checkpoint& arm, std::uint64_t seed);
Checkpoint train_mpm(const Config& config, std::span<const LabeledSample> data, const Checkpoint& arm,
                     std::uint64_t seed, const TrainOptions& options = {});

// Batch of equal-length samples; hypotheses come from the frozen recognizer
// and eps is drawn from `rng`.
MotionModel::Batch make_batch(const MotionModel& model, const ParamStore& params,
                              std::span<const LabeledSample* const> samples, Rng& rng);

struct LossValues {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  double classification = 0.0;
};
// Loss on `data` with a fixed noise seed, no parameter update.
LossValues mpm_dataset_loss(const Checkpoint& mpm, std::span<const LabeledSample> data, std::uint64_t seed);

struct Prediction {
  std::vector<MotionSequence> samples;
  // alphas[t][g]; empty when adaptive fusion is off.
  std::vector<std::vector<double>> alphas;
};

// `count` futures of `horizon` frames for one past segment and target action.
Prediction predict(const Checkpoint& mpm, const MotionSequence& past, int future_action, std::size_t horizon,
                   std::size_t count, std::uint64_t seed);

struct ActionReport {
  int action = 0;
  std::size_t conditions = 0;
  double acc = 0.0;
  std::optional<double> div;
  std::optional<double> div_w;

  bool operator==(const ActionReport&) const = default;
};

struct EvalReport {
  double acc = 0.0;
  double fid_train = 0.0;
  double fid_test = 0.0;
  std::optional<double> div;
  std::optional<double> div_w;
  std::vector<ActionReport> per_action;
  std::string config_hash;
  std::uint64_t seed = 0;

  bool operator==(const EvalReport&) const = default;
};

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Scores externally produced futures: generated[i] holds the samples for
// test condition i. Diversity needs at least two samples per condition.
EvalReport score(const Config& config, const Checkpoint& eval_arm, std::span<const LabeledSample> train,
                 std::span<const LabeledSample> test, std::span<const std::vector<MotionSequence>> generated,
                 std::uint64_t seed, std::size_t jobs = 1);

// Generates config.samples futures per test condition and scores them.
EvalReport evaluate(const Checkpoint& mpm, const Checkpoint& eval_arm, std::span<const LabeledSample> train,
                    std::span<const LabeledSample> test, std::uint64_t seed, std::size_t jobs = 1,
                    std::vector<std::vector<MotionSequence>>* generated_out = nullptr);

}  // namespace mb
