#pragma once
// Versioned JSON snapshot of a training stage: configuration, every named
// parameter (shape, flat values, trainable flag), optimizer moments, the
// training RNG state and the epoch counter.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "motionbank/adam.hpp"
#include "motionbank/config.hpp"
#include "motionbank/params.hpp"

namespace mb {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  // "arm" (recognizer only) or "mpm" (full model with its frozen recognizer).
  std::string kind;
  Config config;
  ParamStore params;
  AdamState adam;
  std::string rng_state;
  std::size_t epoch = 0;

  bool operator==(const Checkpoint&) const = default;
};

nlohmann::json to_json(const Checkpoint& checkpoint);
// Errors name the offending field.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

// Names and shapes must be exactly those the config implies for the kind.
void validate_checkpoint(const Checkpoint& checkpoint);

std::string serialize_checkpoint(const Checkpoint& checkpoint);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Reference parameter layouts (fresh initializations from a fixed seed).
ParamStore arm_layout(const Config& config);
ParamStore mpm_layout(const Config& config);

}  // namespace mb
