#include "motionbank/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "motionbank/errors.hpp"
#include "motionbank/model.hpp"
#include "motionbank/rng.hpp"

namespace mb {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ValidationError("checkpoint field '" + field + "': " + what);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) field_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

json tensor_json(const Tensor& t) {
  return json{{"shape", t.shape()}, {"values", std::vector<double>(t.data().begin(), t.data().end())}};
}

Tensor tensor_from(const json& j, const std::string& path) {
  const json& shape_j = require(j, "shape", path);
  const json& values_j = require(j, "values", path);
  if (!shape_j.is_array()) field_error(join(path, "shape"), "expected an array");
  if (!values_j.is_array()) field_error(join(path, "values"), "expected an array");
  Tensor::Shape shape;
  for (std::size_t i = 0; i < shape_j.size(); ++i) {
    if (!shape_j[i].is_number_unsigned() || shape_j[i].get<std::size_t>() == 0) {
      field_error(join(path, "shape") + "[" + std::to_string(i) + "]", "expected a positive integer");
    }
    shape.push_back(shape_j[i].get<std::size_t>());
  }
  std::vector<double> values;
  values.reserve(values_j.size());
  for (std::size_t i = 0; i < values_j.size(); ++i) {
    if (!values_j[i].is_number()) field_error(join(path, "values") + "[" + std::to_string(i) + "]", "expected a number");
    values.push_back(values_j[i].get<double>());
  }
  try {
    return Tensor(shape, std::move(values));
  } catch (const std::exception& e) {
    field_error(path, e.what());
  }
}

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    field_error(path, "wrong type");
  }
}

}  // namespace

json to_json(const Checkpoint& c) {
  json params = json::object();
  for (const auto& [name, p] : c.params) {
    json entry = tensor_json(p.value);
    entry["trainable"] = p.trainable;
    params[name] = std::move(entry);
  }
  json m = json::object();
  json v = json::object();
  for (const auto& [name, t] : c.adam.m) m[name] = tensor_json(t);
  for (const auto& [name, t] : c.adam.v) v[name] = tensor_json(t);
  return json{{"format_version", kCheckpointVersion},
              {"kind", c.kind},
              {"config", to_json(c.config)},
              {"params", std::move(params)},
              {"adam", json{{"step", c.adam.step}, {"m", std::move(m)}, {"v", std::move(v)}}},
              {"rng", c.rng_state},
              {"epoch", c.epoch}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object()) field_error("<root>", "expected an object");
  const json& version = require(j, "format_version", "");
  if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion) {
    field_error("format_version", "unsupported version " + version.dump() + " (expected " +
                                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint c;
  c.kind = get_as<std::string>(require(j, "kind", ""), "kind");
  if (c.kind != "arm" && c.kind != "mpm") field_error("kind", "expected \"arm\" or \"mpm\", got \"" + c.kind + "\"");
  try {
    c.config = config_from_json(require(j, "config", ""));
  } catch (const ValidationError& e) {
    field_error("config", e.what());
  }
  const json& params = require(j, "params", "");
  if (!params.is_object()) field_error("params", "expected an object");
  for (const auto& [name, entry] : params.items()) {
    const std::string path = "params." + name;
    const bool trainable = get_as<bool>(require(entry, "trainable", path), path + ".trainable");
    c.params.add(name, tensor_from(entry, path), trainable);
  }
  const json& adam = require(j, "adam", "");
  c.adam.step = get_as<std::uint64_t>(require(adam, "step", "adam"), "adam.step");
  for (const char* which : {"m", "v"}) {
    const json& moments = require(adam, which, "adam");
    if (!moments.is_object()) field_error(std::string("adam.") + which, "expected an object");
    auto& target = which[0] == 'm' ? c.adam.m : c.adam.v;
    for (const auto& [name, entry] : moments.items()) {
      target[name] = tensor_from(entry, std::string("adam.") + which + "." + name);
    }
  }
  c.rng_state = get_as<std::string>(require(j, "rng", ""), "rng");
  try {
    Rng probe;
    probe.set_state(c.rng_state);
  } catch (const std::exception&) {
    field_error("rng", "malformed generator state");
  }
  c.epoch = get_as<std::size_t>(require(j, "epoch", ""), "epoch");
  validate_checkpoint(c);
  return c;
}

ParamStore arm_layout(const Config& config) {
  ParamStore p;
  Rng rng(0);
  Arm(arm_dims(config)).init(p, rng);
  return p;
}

ParamStore mpm_layout(const Config& config) {
  ParamStore p = arm_layout(config);
  Rng rng(0);
  MotionModel(config).init(p, rng);
  return p;
}

void validate_checkpoint(const Checkpoint& c) {
  c.config.validate();
  const ParamStore expected = c.kind == "arm" ? arm_layout(c.config) : mpm_layout(c.config);
  for (const auto& [name, p] : expected) {
    if (!c.params.contains(name)) field_error("params." + name, "missing for this configuration");
    const Tensor& have = c.params.value(name);
    if (have.shape() != p.value.shape()) {
      field_error("params." + name, "shape " + have.shape_string() + ", configuration implies " +
                                        p.value.shape_string());
    }
  }
  for (const auto& [name, p] : c.params) {
    (void)p;
    if (!expected.contains(name)) field_error("params." + name, "not part of this configuration");
  }
  if (c.kind == "mpm") {
    for (const auto& [name, p] : c.params) {
      if (name.rfind("arm.", 0) == 0 && p.trainable) field_error("params." + name, "recognizer must be frozen");
    }
  }
  for (const auto* moments : {&c.adam.m, &c.adam.v}) {
    for (const auto& [name, t] : *moments) {
      if (!c.params.contains(name)) field_error("adam." + name, "moment for an unknown parameter");
      if (t.shape() != c.params.value(name).shape()) field_error("adam." + name, "moment shape differs from parameter");
    }
  }
}

std::string serialize_checkpoint(const Checkpoint& c) { return to_json(c).dump() + "\n"; }

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(c);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return checkpoint_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace mb
