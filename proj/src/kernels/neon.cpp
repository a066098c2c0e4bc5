// NEON (AArch64 Advanced SIMD, two double lanes) variants.

#include "kernels_impl.hpp"

#if defined(__aarch64__) || defined(_M_ARM64)
#include <arm_neon.h>

namespace mb::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
  float64x2_t s2 = vdupq_n_f64(0.0), s3 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = vfmaq_f64(s0, vld1q_f64(a + i), vld1q_f64(b + i));
    s1 = vfmaq_f64(s1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    s2 = vfmaq_f64(s2, vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
    s3 = vfmaq_f64(s3, vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
  }
  for (; i + 2 <= n; i += 2) s0 = vfmaq_f64(s0, vld1q_f64(a + i), vld1q_f64(b + i));
  double s = vaddvq_f64(vaddq_f64(vaddq_f64(s0, s1), vaddq_f64(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sqdist_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    s0 = vfmaq_f64(s0, d0, d0);
    s1 = vfmaq_f64(s1, d1, d1);
  }
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    s0 = vfmaq_f64(s0, d, d);
  }
  double s = vaddvq_f64(vaddq_f64(s0, s1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <int R>
void gemm_rows(std::size_t n, std::size_t k, const double* a, std::size_t ars, std::size_t acs,
               const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    float64x2_t acc[R][2];
    for (int r = 0; r < R; ++r) acc[r][0] = acc[r][1] = vdupq_n_f64(0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * ldb + j;
      const float64x2_t b0 = vld1q_f64(brow);
      const float64x2_t b1 = vld1q_f64(brow + 2);
      for (int r = 0; r < R; ++r) {
        const float64x2_t av = vdupq_n_f64(a[r * ars + p * acs]);
        acc[r][0] = vfmaq_f64(acc[r][0], av, b0);
        acc[r][1] = vfmaq_f64(acc[r][1], av, b1);
      }
    }
    for (int r = 0; r < R; ++r) {
      double* crow = c + r * ldc + j;
      vst1q_f64(crow, vaddq_f64(vld1q_f64(crow), acc[r][0]));
      vst1q_f64(crow + 2, vaddq_f64(vld1q_f64(crow + 2), acc[r][1]));
    }
  }
  for (; j < n; ++j) {
    for (int r = 0; r < R; ++r) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[r * ars + p * acs] * b[p * ldb + j];
      c[r * ldc + j] += s;
    }
  }
}

void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t ars,
                  std::size_t acs, const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) gemm_rows<4>(n, k, a + i * ars, ars, acs, b, ldb, c + i * ldc, ldc);
  switch (m - i) {
    case 3: gemm_rows<3>(n, k, a + i * ars, ars, acs, b, ldb, c + i * ldc, ldc); break;
    case 2: gemm_rows<2>(n, k, a + i * ars, ars, acs, b, ldb, c + i * ldc, ldc); break;
    case 1: gemm_rows<1>(n, k, a + i * ars, ars, acs, b, ldb, c + i * ldc, ldc); break;
    default: break;
  }
}

void gemm_nn_neon(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  gemm_strided(m, n, k, a, lda, 1, b, ldb, c, ldc);
}

void gemm_tn_neon(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  gemm_strided(m, n, k, a, 1, lda, b, ldb, c, ldc);
}

void gemm_nt_neon(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] += dot_neon(a + i * lda, b + j * ldb, k);
  }
}

const KernelTable kNeon{Isa::neon,   dot_neon,     sqdist_neon, axpy_neon,
                        gemm_nn_neon, gemm_tn_neon, gemm_nt_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace mb::kernels::detail

#else

namespace mb::kernels::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace mb::kernels::detail

#endif
