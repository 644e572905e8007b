// Built with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "fairvec/simd/kernels.hpp"

namespace fairvec::simd::avx2 {
namespace {

inline double horizontal_sum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  acc0 = _mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3));
  double sum = horizontal_sum(acc0);
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d k = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_fmadd_pd(k, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    __m256d y1 = _mm256_fmadd_pd(k, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(k, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d k = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(k, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

// Four rows at a time so each load of x feeds four FMAs.
void gemv(const double* matrix, std::size_t rows, std::size_t n,
          const double* x, double* out) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* m0 = matrix + r * n;
    const double* m1 = m0 + n;
    const double* m2 = m1 + n;
    const double* m3 = m2 + n;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d xv = _mm256_loadu_pd(x + i);
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(m0 + i), xv, acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(m1 + i), xv, acc1);
      acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(m2 + i), xv, acc2);
      acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(m3 + i), xv, acc3);
    }
    double s0 = horizontal_sum(acc0);
    double s1 = horizontal_sum(acc1);
    double s2 = horizontal_sum(acc2);
    double s3 = horizontal_sum(acc3);
    for (; i < n; ++i) {
      s0 += m0[i] * x[i];
      s1 += m1[i] * x[i];
      s2 += m2[i] * x[i];
      s3 += m3[i] * x[i];
    }
    out[r] = s0;
    out[r + 1] = s1;
    out[r + 2] = s2;
    out[r + 3] = s3;
  }
  for (; r < rows; ++r) out[r] = dot(matrix + r * n, x, n);
}

}  // namespace

const KernelTable* table() {
  static const KernelTable kTable{Isa::kAvx2, dot, axpy, scale, gemv};
  return &kTable;
}

}  // namespace fairvec::simd::avx2
