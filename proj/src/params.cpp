#include "motionbank/params.hpp"

#include <cstring>

#include "motionbank/errors.hpp"
#include "motionbank/rng.hpp"

namespace mb {

void ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (!entries_.emplace(name, Parameter{std::move(value), trainable}).second) {
    throw ValidationError("duplicate parameter name '" + name + "'");
  }
}

Parameter& ParamStore::at(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

const Parameter& ParamStore::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ValidationError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParamStore::set_trainable_prefix(std::string_view prefix, bool trainable) {
  std::size_t count = 0;
  for (auto& [name, p] : entries_) {
    if (name.starts_with(prefix)) {
      p.trainable = trainable;
      ++count;
    }
  }
  return count;
}

void ParamStore::merge(const ParamStore& other) {
  for (const auto& [name, p] : other.entries_) add(name, p.value, p.trainable);
}

ParamStore ParamStore::subset(std::string_view prefix) const {
  ParamStore out;
  for (const auto& [name, p] : entries_) {
    if (name.starts_with(prefix)) out.add(name, p.value, p.trainable);
  }
  return out;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, p] : entries_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : entries_) {
    if (p.trainable) out.push_back(name);
  }
  return out;
}

std::size_t ParamStore::element_total() const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_) n += p.value.size();
  return n;
}

std::uint64_t ParamStore::checksum(std::string_view prefix) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, p] : entries_) {
    if (!name.starts_with(prefix)) continue;
    feed(name.data(), name.size());
    feed(p.value.ptr(), p.value.size() * sizeof(double));
  }
  return h;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (auto a = entries_.begin(), b = other.entries_.begin(); a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.trainable != b->second.trainable) return false;
    const auto& va = a->second.value;
    const auto& vb = b->second.value;
    if (va.shape() != vb.shape()) return false;
    if (std::memcmp(va.ptr(), vb.ptr(), va.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

Tensor uniform_tensor(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace mb
