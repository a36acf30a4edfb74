#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the neighbour search, the MLP and the
// optimizer. Every kernel has a portable scalar reference; SIMD variants are
// selected at runtime and must match the reference (bitwise for the distance
// and optimizer kernels, to rounding for gemm, which fuses multiply-add).

namespace dde::simd {

struct AdamCoeffs
{
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1; // 1 - beta1^t
  double bias2; // 1 - beta2^t
};

struct KernelTable
{
  std::string_view name;

  /// out[j] = sum_a (query[a] - soa[a * stride + j])^2, j < count. The sum
  /// runs over axes in ascending order with separate multiply and add.
  void (*sq_distances)(const double* query,
                       std::size_t dim,
                       const double* soa,
                       std::size_t stride,
                       std::size_t count,
                       double* out);

  /// C[m x n] (+)= A[m x k] * B[k x n], all row-major with leading dims.
  void (*gemm)(std::size_t m,
               std::size_t n,
               std::size_t k,
               const double* a,
               std::size_t lda,
               const double* b,
               std::size_t ldb,
               double* c,
               std::size_t ldc,
               bool accumulate);

  /// In-place Adam step over a flat parameter array.
  void (*adam_update)(double* param,
                      const double* grad,
                      double* m,
                      double* v,
                      std::size_t count,
                      const AdamCoeffs& coeffs);
};

const KernelTable&
scalar_kernels();

/// AVX2/FMA table, or nullptr when it was not compiled in or the CPU lacks
/// the instructions.
const KernelTable*
avx2_kernels();

/// Table used by the library. Chosen once: AVX2 when available, unless the
/// environment variable DDE_KERNELS=scalar forces the reference path.
const KernelTable&
active_kernels();

} // namespace dde::simd
