#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "motionbank/adam.hpp"
#include "motionbank/synthetic.hpp"

namespace mb {

// Every hyperparameter of data generation, both training stages, inference
// and evaluation. Serialized as a flat JSON object; unknown keys are rejected
// and missing keys keep their defaults.
struct Config {
  // data
  std::size_t pose_dim = 16;
  int num_classes = 4;
  std::size_t past_frames = 10;
  std::size_t future_frames = 25;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 25;
  std::size_t transition_frames = 4;
  double noise_scale = 0.05;

  // action recognition module
  std::size_t arm_hidden = 64;
  std::size_t arm_head_hidden = 64;
  std::size_t tau_cls = 5;

  // CVAE
  std::size_t latent_dim = 16;
  std::size_t cvae_hidden = 64;
  double lambda_kl = 0.1;
  double lambda_ce = 1.0;

  // banks
  std::size_t stab_tuples = 8;
  std::size_t acb_tuples = 8;
  std::size_t key_dim = 32;
  std::size_t value_dim = 32;
  std::size_t feature_dim = 32;
  std::size_t query_hidden = 64;
  std::size_t top_k = 2;
  // Use only the ARM's argmax past label (no soft search branches).
  bool hard_search = false;

  // adaptive fusion
  double gamma = 0.9;
  std::size_t tau_aaa = 5;

  // ablations
  bool disable_stab = false;
  bool disable_acb = false;
  bool disable_aaa = false;
  bool disable_running_mean = false;
  // alpha <- gamma*alpha + (1-gamma)*CE instead of the verbatim update.
  bool conventional_ema = false;

  // optimization
  double learning_rate = 0.002;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs_arm = 150;
  std::size_t epochs_mpm = 150;
  std::size_t lr_decay_start_arm = 50;
  std::size_t lr_decay_start_mpm = 100;
  double lr_final_fraction = 0.1;
  // Write a checkpoint every N epochs when an output path is given (0: only at the end).
  std::size_t checkpoint_interval = 0;

  // evaluation / inference
  std::size_t samples = 50;
  std::uint64_t seed = 0;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }
  SyntheticSpec synthetic(bool test_split) const;

  bool operator==(const Config&) const = default;
};

nlohmann::json to_json(const Config& config);
// Validates after parsing.
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::filesystem::path& path);

// FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const Config& config);

// Learning rate for a 0-based epoch: constant for epochs < decay_start, then
// linear down to final_fraction * lr at the last epoch.
double scheduled_lr(double lr, std::size_t epoch, std::size_t epochs, std::size_t decay_start, double final_fraction);

}  // namespace mb
