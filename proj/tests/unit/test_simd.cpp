#include "dde/simd/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

using namespace dde;

namespace {

std::vector<double>
random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0)
{
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v)
    x = g(rng);
  return v;
}

bool
same_bits(const std::vector<double>& a, const std::vector<double>& b)
{
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_SUITE("simd")
{
  TEST_CASE("scalar sq_distances matches direct sum")
  {
    std::mt19937_64 rng(1);
    const std::size_t dim = 3, count = 17;
    const auto q = random_vec(rng, dim);
    const auto soa = random_vec(rng, dim * count);
    std::vector<double> out(count);
    simd::scalar_kernels().sq_distances(q.data(), dim, soa.data(), count, count,
                                        out.data());
    for (std::size_t j = 0; j < count; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < dim; ++a) {
        const double d = q[a] - soa[a * count + j];
        s += d * d;
      }
      CHECK(out[j] == s);
    }
  }

  TEST_CASE("scalar gemm matches naive product")
  {
    std::mt19937_64 rng(2);
    const std::size_t m = 5, n = 7, k = 3;
    const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
    std::vector<double> c(m * n, 1.0);
    simd::scalar_kernels().gemm(m, n, k, a.data(), k, b.data(), n, c.data(), n, true);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 1.0;
        for (std::size_t p = 0; p < k; ++p)
          s += a[i * k + p] * b[p * n + j];
        CHECK(c[i * n + j] == doctest::Approx(s).epsilon(1e-14));
      }
  }

  TEST_CASE("avx2 kernels agree with the scalar reference")
  {
    const auto* fast = simd::avx2_kernels();
    if (!fast) {
      MESSAGE("AVX2 kernels unavailable; equivalence not exercised");
      return;
    }
    const auto& ref = simd::scalar_kernels();
    std::mt19937_64 rng(42);

    SUBCASE("sq_distances bitwise")
    {
      for (std::size_t dim : { 1, 2, 3, 5, 10, 17 })
        for (std::size_t count : { 1, 3, 4, 7, 8, 31, 32, 33, 100 }) {
          const std::size_t stride = count + rng() % 3;
          const auto q = random_vec(rng, dim, 3.0);
          const auto soa = random_vec(rng, dim * stride, 3.0);
          std::vector<double> a(count), b(count);
          ref.sq_distances(q.data(), dim, soa.data(), stride, count, a.data());
          fast->sq_distances(q.data(), dim, soa.data(), stride, count, b.data());
          CHECK(same_bits(a, b));
        }
    }

    SUBCASE("adam_update bitwise")
    {
      for (std::size_t count : { 1, 3, 4, 5, 64, 1001 }) {
        auto p1 = random_vec(rng, count), g = random_vec(rng, count);
        auto m1 = random_vec(rng, count, 0.1), v1 = random_vec(rng, count, 0.1);
        for (auto& x : v1)
          x = std::abs(x);
        auto p2 = p1, m2 = m1, v2 = v1;
        const simd::AdamCoeffs c{ 1e-3, 0.9, 0.999, 1e-8, 1 - 0.9 * 0.9,
                                  1 - 0.999 * 0.999 };
        ref.adam_update(p1.data(), g.data(), m1.data(), v1.data(), count, c);
        fast->adam_update(p2.data(), g.data(), m2.data(), v2.data(), count, c);
        CHECK(same_bits(p1, p2));
        CHECK(same_bits(m1, m2));
        CHECK(same_bits(v1, v2));
      }
    }

    SUBCASE("gemm to rounding")
    {
      for (std::size_t m : { 1, 2, 5, 64 })
        for (std::size_t n : { 1, 3, 4, 9, 128 })
          for (std::size_t k : { 1, 7, 32 })
            for (bool acc : { false, true }) {
              const std::size_t lda = k + 1, ldb = n + 2, ldc = n + 3;
              const auto a = random_vec(rng, m * lda), b = random_vec(rng, k * ldb);
              auto c1 = random_vec(rng, m * ldc);
              auto c2 = c1;
              ref.gemm(m, n, k, a.data(), lda, b.data(), ldb, c1.data(), ldc, acc);
              fast->gemm(m, n, k, a.data(), lda, b.data(), ldb, c2.data(), ldc, acc);
              for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                  double mag = acc ? std::abs(c1[i * ldc + j]) : 0.0;
                  for (std::size_t p = 0; p < k; ++p)
                    mag += std::abs(a[i * lda + p] * b[p * ldb + j]);
                  CHECK(std::abs(c1[i * ldc + j] - c2[i * ldc + j]) <=
                        1e-14 * mag + 1e-300);
                }
              // padding columns untouched
              for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = n; j < ldc; ++j)
                  CHECK(c1[i * ldc + j] == c2[i * ldc + j]);
            }
    }
  }

  TEST_CASE("active table is one of the known tables")
  {
    const auto& k = simd::active_kernels();
    CHECK((&k == &simd::scalar_kernels() || &k == simd::avx2_kernels()));
  }
}
