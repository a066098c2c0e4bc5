#include "motionbank/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "motionbank/errors.hpp"
#include "motionbank/rng.hpp"

namespace mb {
namespace {

using nlohmann::json;

// One table drives serialization, parsing and the unknown-key check.
template <typename Fn>
void for_each_field(Config& c, Fn&& fn) {
  fn("pose_dim", c.pose_dim);
  fn("num_classes", c.num_classes);
  fn("past_frames", c.past_frames);
  fn("future_frames", c.future_frames);
  fn("train_per_class", c.train_per_class);
  fn("test_per_class", c.test_per_class);
  fn("transition_frames", c.transition_frames);
  fn("noise_scale", c.noise_scale);
  fn("arm_hidden", c.arm_hidden);
  fn("arm_head_hidden", c.arm_head_hidden);
  fn("tau_cls", c.tau_cls);
  fn("latent_dim", c.latent_dim);
  fn("cvae_hidden", c.cvae_hidden);
  fn("lambda_kl", c.lambda_kl);
  fn("lambda_ce", c.lambda_ce);
  fn("stab_tuples", c.stab_tuples);
  fn("acb_tuples", c.acb_tuples);
  fn("key_dim", c.key_dim);
  fn("value_dim", c.value_dim);
  fn("feature_dim", c.feature_dim);
  fn("query_hidden", c.query_hidden);
  fn("top_k", c.top_k);
  fn("hard_search", c.hard_search);
  fn("gamma", c.gamma);
  fn("tau_aaa", c.tau_aaa);
  fn("disable_stab", c.disable_stab);
  fn("disable_acb", c.disable_acb);
  fn("disable_aaa", c.disable_aaa);
  fn("disable_running_mean", c.disable_running_mean);
  fn("conventional_ema", c.conventional_ema);
  fn("learning_rate", c.learning_rate);
  fn("adam_beta1", c.adam_beta1);
  fn("adam_beta2", c.adam_beta2);
  fn("adam_eps", c.adam_eps);
  fn("batch_size", c.batch_size);
  fn("epochs_arm", c.epochs_arm);
  fn("epochs_mpm", c.epochs_mpm);
  fn("lr_decay_start_arm", c.lr_decay_start_arm);
  fn("lr_decay_start_mpm", c.lr_decay_start_mpm);
  fn("lr_final_fraction", c.lr_final_fraction);
  fn("checkpoint_interval", c.checkpoint_interval);
  fn("samples", c.samples);
  fn("seed", c.seed);
}

template <typename T>
void read_field(const json& j, const std::string& key, T& out) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ValidationError("expected a boolean");
      out = j.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ValidationError("expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0) {
          throw ValidationError("expected a non-negative integer");
        }
      }
      out = j.get<T>();
    } else {
      if (!j.is_number()) throw ValidationError("expected a number");
      out = j.get<T>();
    }
  } catch (const ValidationError& e) {
    throw ValidationError("config key '" + key + "': " + e.what());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError("invalid config: " + message);
}

}  // namespace

void Config::validate() const {
  require(pose_dim > 0, "pose_dim must be positive");
  require(num_classes >= 1, "num_classes must be >= 1");
  require(past_frames > 0 && future_frames > 0, "past_frames and future_frames must be positive");
  require(train_per_class > 0 && test_per_class > 0, "per-class sample counts must be positive");
  require(noise_scale >= 0.0, "noise_scale must be >= 0");
  require(arm_hidden > 0 && arm_head_hidden > 0, "ARM widths must be positive");
  require(latent_dim > 0 && cvae_hidden > 0, "CVAE widths must be positive");
  require(lambda_kl >= 0.0 && lambda_ce >= 0.0, "loss weights must be >= 0");
  require(stab_tuples > 0 && acb_tuples > 0, "bank cells need at least one tuple");
  require(key_dim > 0 && value_dim > 0 && feature_dim > 0 && query_hidden > 0, "bank widths must be positive");
  require(top_k >= 1 && top_k <= static_cast<std::size_t>(num_classes), "top_k must be in [1, num_classes]");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0, 1]");
  require(learning_rate >= 0.0, "learning_rate must be >= 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0, "Adam betas must be in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(lr_final_fraction >= 0.0 && lr_final_fraction <= 1.0, "lr_final_fraction must be in [0, 1]");
  require(samples >= 1, "samples must be >= 1");
}

SyntheticSpec Config::synthetic(bool test_split) const {
  SyntheticSpec s;
  s.classes = num_classes;
  s.pose_dim = pose_dim;
  s.per_class = test_split ? test_per_class : train_per_class;
  s.past_frames = past_frames;
  s.future_frames = future_frames;
  s.transition_frames = transition_frames;
  s.noise = noise_scale;
  s.seed = mix_seed(seed, test_split ? "synthetic-test" : "synthetic-train");
  s.pattern_seed = seed;
  return s;
}

json to_json(const Config& config) {
  json j = json::object();
  Config copy = config;
  for_each_field(copy, [&j](const char* key, auto& value) { j[key] = value; });
  return j;
}

Config config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  Config c;
  std::map<std::string, bool> known;
  for_each_field(c, [&](const char* key, auto& value) {
    known[key] = true;
    if (auto it = j.find(key); it != j.end()) read_field(*it, key, value);
  });
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
  return config_from_json(j);
}

std::string config_hash(const Config& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double scheduled_lr(double lr, std::size_t epoch, std::size_t epochs, std::size_t decay_start, double final_fraction) {
  if (epoch < decay_start || epochs <= decay_start) return lr;
  const double progress = static_cast<double>(epoch - decay_start + 1) / static_cast<double>(epochs - decay_start);
  return lr * (1.0 - (1.0 - final_fraction) * std::min(progress, 1.0));
}

}  // namespace mb
