#include "dde/simd/kernels.hpp"

#include <cmath>

namespace dde::simd {
namespace {

void
sq_distances_scalar(const double* query,
                    std::size_t dim,
                    const double* soa,
                    std::size_t stride,
                    std::size_t count,
                    double* out)
{
  for (std::size_t j = 0; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      const double diff = query[a] - soa[a * stride + j];
      acc = acc + diff * diff;
    }
    out[j] = acc;
  }
}

void
gemm_scalar(std::size_t m,
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
    double* crow = c + i * ldc;
    if (!accumulate)
      for (std::size_t j = 0; j < n; ++j)
        crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * lda + p];
      const double* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j)
        crow[j] = crow[j] + aip * brow[j];
    }
  }
}

void
adam_update_scalar(double* param,
                   const double* grad,
                   double* m,
                   double* v,
                   std::size_t count,
                   const AdamCoeffs& c)
{
  const double one_b1 = 1.0 - c.beta1;
  const double one_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < count; ++i) {
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
scalar_kernels()
{
  static const KernelTable table{
    "scalar", &sq_distances_scalar, &gemm_scalar, &adam_update_scalar
  };
  return table;
}

} // namespace dde::simd
