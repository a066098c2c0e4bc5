#pragma once
// Dense double-precision kernels behind the autodiff core and the metrics.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64). The active variant is chosen once at
// startup from the CPU's capabilities and can be overridden with the
// MOTIONBANK_ISA environment variable (scalar | avx2 | neon) or set_isa().
//
// All matrices are row-major. Results of different variants agree to rounding
// (summation order and FMA contraction differ); a given variant is fully
// deterministic.

#include <cstddef>
#include <string_view>

namespace mb::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
Isa parse_isa(std::string_view name);

// C (m x n) += A (m x k) * B (k x n)
using GemmNN = void (*)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                        const double* b, std::size_t ldb, double* c, std::size_t ldc);
// C (m x n) += A^T * B, A stored (k x m)
using GemmTN = GemmNN;
// C (m x n) += A * B^T, B stored (n x k)
using GemmNT = GemmNN;

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sqdist)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  GemmNN gemm_nn;
  GemmTN gemm_tn;
  GemmNT gemm_nt;
};

bool isa_supported(Isa isa);
Isa best_isa();

const KernelTable& table(Isa isa);
const KernelTable& active();
Isa active_isa();

// Not thread-safe with respect to concurrently running kernels; switch
// before starting work.
void set_isa(Isa isa);

class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active_isa()) { set_isa(isa); }
  ~ScopedIsa() { set_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline double sqdist(const double* a, const double* b, std::size_t n) { return active().sqdist(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }

}  // namespace mb::kernels
