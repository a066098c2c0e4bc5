// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma;
// nothing here may run before avx2_table() has been checked against the CPU.

#include "kernels_impl.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace mb::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sqdist_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    s0 = _mm256_fmadd_pd(d0, d0, s0);
    s1 = _mm256_fmadd_pd(d1, d1, s1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    s0 = _mm256_fmadd_pd(d, d, s0);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// R rows of C starting at c; element (r, p) of op(A) lives at a[r*ars + p*acs].
template <int R>
void gemm_rows(std::size_t n, std::size_t k, const double* a, std::size_t ars, std::size_t acs,
               const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d acc[R][2];
    for (int r = 0; r < R; ++r) acc[r][0] = acc[r][1] = _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * ldb + j;
      const __m256d b0 = _mm256_loadu_pd(brow);
      const __m256d b1 = _mm256_loadu_pd(brow + 4);
      for (int r = 0; r < R; ++r) {
        const __m256d av = _mm256_broadcast_sd(a + r * ars + p * acs);
        acc[r][0] = _mm256_fmadd_pd(av, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_pd(av, b1, acc[r][1]);
      }
    }
    for (int r = 0; r < R; ++r) {
      double* crow = c + r * ldc + j;
      _mm256_storeu_pd(crow, _mm256_add_pd(_mm256_loadu_pd(crow), acc[r][0]));
      _mm256_storeu_pd(crow + 4, _mm256_add_pd(_mm256_loadu_pd(crow + 4), acc[r][1]));
    }
  }
  for (; j + 4 <= n; j += 4) {
    __m256d acc[R];
    for (int r = 0; r < R; ++r) acc[r] = _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d b0 = _mm256_loadu_pd(b + p * ldb + j);
      for (int r = 0; r < R; ++r) {
        acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * ars + p * acs), b0, acc[r]);
      }
    }
    for (int r = 0; r < R; ++r) {
      double* crow = c + r * ldc + j;
      _mm256_storeu_pd(crow, _mm256_add_pd(_mm256_loadu_pd(crow), acc[r]));
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

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  gemm_strided(m, n, k, a, lda, 1, b, ldb, c, ldc);
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  gemm_strided(m, n, k, a, 1, lda, b, ldb, c, ldc);
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * lda;
    double* crow = c + i * ldc;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * ldb;
      const double* b1 = b0 + ldb;
      const double* b2 = b1 + ldb;
      const double* b3 = b2 + ldb;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d av = _mm256_loadu_pd(arow + p);
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + p), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; p < k; ++p) {
        r0 += arow[p] * b0[p];
        r1 += arow[p] * b1[p];
        r2 += arow[p] * b2[p];
        r3 += arow[p] * b3[p];
      }
      crow[j] += r0;
      crow[j + 1] += r1;
      crow[j + 2] += r2;
      crow[j + 3] += r3;
    }
    for (; j < n; ++j) crow[j] += dot_avx2(arow, b + j * ldb, k);
  }
}

const KernelTable kAvx2{Isa::avx2,   dot_avx2,     sqdist_avx2, axpy_avx2,
                        gemm_nn_avx2, gemm_tn_avx2, gemm_nt_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace mb::kernels::detail

#else

namespace mb::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace mb::kernels::detail

#endif
