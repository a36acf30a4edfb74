#include "dde/baselines/kde.hpp"
#include "dde/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dde;
using namespace dde::baselines;

namespace {

SampleSet
normal_sample(std::size_t n, std::size_t d, std::uint64_t seed, double sd = 1.0)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n * d);
  for (auto& x : v)
    x = g(rng);
  return SampleSet(d, std::move(v));
}

} // namespace

TEST_SUITE("kde")
{
  TEST_CASE("Silverman bandwidth from the sample standard deviation")
  {
    const auto s = normal_sample(500, 2, 1, 2.0);
    const auto h = silverman_bandwidth(s);
    REQUIRE(h.size() == 2);
    for (std::size_t a = 0; a < 2; ++a) {
      double mean = 0, ss = 0;
      for (std::size_t i = 0; i < s.size(); ++i)
        mean += s.point(i)[a];
      mean /= 500;
      for (std::size_t i = 0; i < s.size(); ++i)
        ss += (s.point(i)[a] - mean) * (s.point(i)[a] - mean);
      const double sigma = std::sqrt(ss / 499);
      CHECK(h[a] == doctest::Approx(sigma * std::pow(4.0 / (4.0 * 500), 1.0 / 6.0)));
    }
  }

  TEST_CASE("closed-form 1D factor")
  {
    // (4 / 3n)^(1/5) for d = 1, n = 10^4
    SampleSet s(1, { -1.0, 1.0 }); // sigma = sqrt(2)
    const double h = silverman_bandwidth(s)[0];
    CHECK(h == doctest::Approx(std::sqrt(2.0) * std::pow(4.0 / 6.0, 0.2)));
    CHECK(std::pow(4.0 / 3e4, 0.2) == doctest::Approx(0.16787).epsilon(1e-4));
  }

  TEST_CASE("density equals the kernel sum")
  {
    const auto s = normal_sample(50, 2, 2);
    const KdeEstimator kde(s, { 0.3, 0.7 });
    const double q[2] = { 0.2, -0.4 };
    double ref = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      const double z0 = (q[0] - s.point(i)[0]) / 0.3, z1 = (q[1] - s.point(i)[1]) / 0.7;
      ref += std::exp(-0.5 * (z0 * z0 + z1 * z1));
    }
    ref /= 50 * 0.3 * 0.7 * 2 * std::numbers::pi;
    CHECK(kde.density(q) == doctest::Approx(ref).epsilon(1e-13));
    SampleSet qs(2, { 0.2, -0.4, 0.0, 0.0 });
    const auto v = kde_estimate(kde, qs);
    CHECK(v[0] == kde.density(q));
  }

  TEST_CASE("1D estimate integrates to one")
  {
    const auto s = normal_sample(300, 1, 3);
    const KdeEstimator kde(s);
    double sum = 0;
    const double lo = -10, hi = 10, step = 0.001;
    for (double x = lo; x < hi; x += step)
      sum += kde.density(std::span(&x, 1)) * step;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("errors")
  {
    CHECK_THROWS_AS(silverman_bandwidth(SampleSet(1, { 1.0 })), DegenerateSample);
    CHECK_THROWS_AS(silverman_bandwidth(SampleSet(2, { 1.0, 0.0, 2.0, 0.0 })),
                    DegenerateSample);
    CHECK_THROWS_AS(KdeEstimator(normal_sample(5, 1, 1), { -1.0 }), InvalidConfig);
    CHECK_THROWS_AS(KdeEstimator(normal_sample(5, 2, 1), { 1.0 }), InvalidConfig);
  }
}
