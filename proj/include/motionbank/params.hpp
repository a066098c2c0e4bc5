#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "motionbank/tensor.hpp"

namespace mb {

class Rng;

struct Parameter {
  Tensor value;
  bool trainable = true;
};

// Named parameters in deterministic (lexicographic) order. Frozen entries
// are never touched by an optimizer step.
class ParamStore {
 public:
  using Map = std::map<std::string, Parameter, std::less<>>;

  void add(const std::string& name, Tensor value, bool trainable = true);
  bool contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Tensor& value(std::string_view name) { return at(name).value; }
  const Tensor& value(std::string_view name) const { return at(name).value; }

  void set_trainable(std::string_view name, bool trainable) { at(name).trainable = trainable; }
  // Returns how many entries matched.
  std::size_t set_trainable_prefix(std::string_view prefix, bool trainable);

  // Copies every entry of `other` whose name is not yet present; names
  // already present must not collide.
  void merge(const ParamStore& other);
  ParamStore subset(std::string_view prefix) const;

  std::vector<std::string> names() const;
  std::vector<std::string> trainable_names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t element_total() const;

  // FNV-1a over names and raw value bytes of entries under `prefix`.
  std::uint64_t checksum(std::string_view prefix = {}) const;

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  bool operator==(const ParamStore& other) const;

 private:
  Map entries_;
};

// Uniform(-bound, bound) matrix.
Tensor uniform_tensor(Rng& rng, std::size_t rows, std::size_t cols, double bound);

}  // namespace mb
