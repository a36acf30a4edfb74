// Compiled with -mavx2 -mfma. Only reached through avx2_kernels(), which
// checks CPU support before handing the table out.
#include "dde/simd/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace dde::simd {
namespace {

void
sq_distances_avx2(const double* query,
                  std::size_t dim,
                  const double* soa,
                  std::size_t stride,
                  std::size_t count,
                  double* out)
{
  std::size_t j = 0;
  for (; j + 8 <= count; j += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t a = 0; a < dim; ++a) {
      const __m256d q = _mm256_set1_pd(query[a]);
      const double* row = soa + a * stride + j;
      const __m256d d0 = _mm256_sub_pd(q, _mm256_loadu_pd(row));
      const __m256d d1 = _mm256_sub_pd(q, _mm256_loadu_pd(row + 4));
      // mul then add, never fused: must round like the scalar reference
      acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
      acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
    }
    _mm256_storeu_pd(out + j, acc0);
    _mm256_storeu_pd(out + j + 4, acc1);
  }
  for (; j + 4 <= count; j += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t a = 0; a < dim; ++a) {
      const __m256d d = _mm256_sub_pd(_mm256_set1_pd(query[a]),
                                      _mm256_loadu_pd(soa + a * stride + j));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    _mm256_storeu_pd(out + j, acc);
  }
  for (; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      const double diff = query[a] - soa[a * stride + j];
      acc = acc + diff * diff;
    }
    out[j] = acc;
  }
}

// 4 x 8 register tile: eight accumulators, two B loads and four broadcasts
// per step of the inner dimension.
inline void
tile_4x8(std::size_t k,
         const double* a,
         std::size_t lda,
         const double* b,
         std::size_t ldb,
         double* c,
         std::size_t ldc,
         bool accumulate)
{
  __m256d c00, c01, c10, c11, c20, c21, c30, c31;
  if (accumulate) {
    c00 = _mm256_loadu_pd(c);
    c01 = _mm256_loadu_pd(c + 4);
    c10 = _mm256_loadu_pd(c + ldc);
    c11 = _mm256_loadu_pd(c + ldc + 4);
    c20 = _mm256_loadu_pd(c + 2 * ldc);
    c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
    c30 = _mm256_loadu_pd(c + 3 * ldc);
    c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
  }
  const double* a0 = a;
  const double* a1 = a + lda;
  const double* a2 = a + 2 * lda;
  const double* a3 = a + 3 * lda;
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    __m256d av = _mm256_broadcast_sd(a0 + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a1 + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a2 + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a3 + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

inline void
tile_1x8(std::size_t k,
         const double* a,
         const double* b,
         std::size_t ldb,
         double* c,
         bool accumulate)
{
  __m256d c0 = accumulate ? _mm256_loadu_pd(c) : _mm256_setzero_pd();
  __m256d c1 = accumulate ? _mm256_loadu_pd(c + 4) : _mm256_setzero_pd();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d av = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * ldb), c0);
    c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * ldb + 4), c1);
  }
  _mm256_storeu_pd(c, c0);
  _mm256_storeu_pd(c + 4, c1);
}

inline void
column_tail(std::size_t m,
            std::size_t j0,
            std::size_t n,
            std::size_t k,
            const double* a,
            std::size_t lda,
            const double* b,
            std::size_t ldb,
            double* c,
            std::size_t ldc,
            bool accumulate)
{
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = j0;
    for (; j + 4 <= n; j += 4) {
      __m256d acc =
        accumulate ? _mm256_loadu_pd(c + i * ldc + j) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p)
        acc = _mm256_fmadd_pd(_mm256_broadcast_sd(a + i * lda + p),
                              _mm256_loadu_pd(b + p * ldb + j),
                              acc);
      _mm256_storeu_pd(c + i * ldc + j, acc);
    }
    for (; j < n; ++j) {
      double acc = accumulate ? c[i * ldc + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p)
        acc = std::fma(a[i * lda + p], b[p * ldb + j], acc);
      c[i * ldc + j] = acc;
    }
  }
}

void
gemm_avx2(std::size_t m,
          std::size_t n,
          std::size_t k,
          const double* a,
          std::size_t lda,
          const double* b,
          std::size_t ldb,
          double* c,
          std::size_t ldc,
          bool accumulate)
{
  const std::size_t n8 = n - n % 8;
  // Column panels outermost: the k x 8 slice of B stays cache resident while
  // all row tiles sweep over it.
  for (std::size_t j = 0; j < n8; j += 8) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4)
      tile_4x8(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc,
               accumulate);
    for (; i < m; ++i)
      tile_1x8(k, a + i * lda, b + j, ldb, c + i * ldc + j, accumulate);
  }
  if (n8 < n)
    column_tail(m, n8, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void
adam_update_avx2(double* param,
                 const double* grad,
                 double* m,
                 double* v,
                 std::size_t count,
                 const AdamCoeffs& c)
{
  const double one_b1 = 1.0 - c.beta1;
  const double one_b2 = 1.0 - c.beta2;
  const __m256d vb1 = _mm256_set1_pd(c.beta1);
  const __m256d vb2 = _mm256_set1_pd(c.beta2);
  const __m256d v1b1 = _mm256_set1_pd(one_b1);
  const __m256d v1b2 = _mm256_set1_pd(one_b2);
  const __m256d vbias1 = _mm256_set1_pd(c.bias1);
  const __m256d vbias2 = _mm256_set1_pd(c.bias2);
  const __m256d vlr = _mm256_set1_pd(c.lr);
  const __m256d veps = _mm256_set1_pd(c.eps);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    __m256d mi = _mm256_loadu_pd(m + i);
    __m256d vi = _mm256_loadu_pd(v + i);
    mi = _mm256_add_pd(_mm256_mul_pd(vb1, mi), _mm256_mul_pd(v1b1, g));
    vi = _mm256_add_pd(_mm256_mul_pd(vb2, vi),
                       _mm256_mul_pd(v1b2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, vbias1);
    const __m256d vhat = _mm256_div_pd(vi, vbias2);
    const __m256d step =
      _mm256_div_pd(_mm256_mul_pd(vlr, mhat),
                    _mm256_add_pd(_mm256_sqrt_pd(vhat), veps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < count; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_b1 * g;
    v[i] = c.beta2 * v[i] + one_b2 * (g * g);
    const double mhat = m[i] / c.bias1;
    const double vhat = v[i] / c.bias2;
    param[i] = param[i] - c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

} // namespace

const KernelTable&
avx2_kernel_table()
{
  static const KernelTable table{
    "avx2", &sq_distances_avx2, &gemm_avx2, &adam_update_avx2
  };
  return table;
}

} // namespace dde::simd
