#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace mb::kernels {
namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  Isa isa = best_isa();
  if (const char* env = std::getenv("MOTIONBANK_ISA"); env != nullptr && *env != '\0') {
    isa = parse_isa(env);
    if (!isa_supported(isa)) {
      throw std::runtime_error("MOTIONBANK_ISA=" + std::string(env) + " is not supported on this CPU");
    }
  }
  return &table(isa);
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table_ptr{initial_table()};
  return table_ptr;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  throw std::invalid_argument("unknown kernel ISA '" + std::string(name) + "'");
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return detail::avx2_table() != nullptr && cpu_has_avx2();
    case Isa::neon: return detail::neon_table() != nullptr;
  }
  return false;
}

Isa best_isa() {
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

const KernelTable& table(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::runtime_error("kernel ISA '" + std::string(isa_name(isa)) + "' is not available");
  }
  switch (isa) {
    case Isa::avx2: return *detail::avx2_table();
    case Isa::neon: return *detail::neon_table();
    case Isa::scalar: break;
  }
  return *detail::scalar_table();
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

Isa active_isa() { return active().isa; }

void set_isa(Isa isa) { current().store(&table(isa), std::memory_order_relaxed); }

}  // namespace mb::kernels
