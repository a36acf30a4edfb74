#include "dde/error.hpp"
#include "dde/nn/smoothing.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace dde;
using namespace dde::nn;

namespace {

using Matrix = std::vector<std::vector<double>>;

std::vector<double>
solve_dense(Matrix a, std::vector<double> b)
{
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c]))
        piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k)
        a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k)
      s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

// Penalized fit g = (W + lambda Q R^-1 Q')^-1 W y on distinct knots, built
// from dense matrices.
std::vector<double>
dense_fit(const std::vector<double>& x,
          const std::vector<double>& y,
          const std::vector<double>& w,
          double lambda)
{
  const std::size_t n = x.size(), c = n - 2;
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    h[i] = x[i + 1] - x[i];
  Matrix q(n, std::vector<double>(c, 0.0)), r(c, std::vector<double>(c, 0.0));
  for (std::size_t j = 0; j < c; ++j) {
    q[j][j] = 1 / h[j];
    q[j + 1][j] = -1 / h[j] - 1 / h[j + 1];
    q[j + 2][j] = 1 / h[j + 1];
    r[j][j] = (h[j] + h[j + 1]) / 3;
    if (j + 1 < c)
      r[j][j + 1] = r[j + 1][j] = h[j + 1] / 6;
  }
  // K = Q R^-1 Q', one column at a time
  Matrix a(n, std::vector<double>(n, 0.0));
  for (std::size_t col = 0; col < n; ++col) {
    std::vector<double> qt(c);
    for (std::size_t j = 0; j < c; ++j)
      qt[j] = q[col][j];
    const auto z = solve_dense(r, qt);
    for (std::size_t row = 0; row < n; ++row) {
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j)
        s += q[row][j] * z[j];
      a[row][col] = lambda * s;
    }
  }
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] += w[i];
    rhs[i] = w[i] * y[i];
  }
  return solve_dense(a, rhs);
}

double
variance_budget(const std::vector<double>& y, double coef)
{
  const double m = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double v = 0;
  for (double t : y)
    v += (t - mean) * (t - mean);
  return v * coef;
}

} // namespace

TEST_SUITE("smoothing")
{
  TEST_CASE("fit equals the dense penalized solution at the chosen penalty")
  {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int inst = 0; inst < 10; ++inst) {
      const std::size_t n = 12 + inst * 3;
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = (i + 0.3 * std::uniform_real_distribution<double>(0, 1)(rng)) * 0.7;
        y[i] = 3 + std::sin(x[i]) + noise(rng);
      }
      const SmoothingSpline sp(x, y, 0.05);
      REQUIRE(std::isfinite(sp.lambda()));
      REQUIRE(sp.lambda() > 0.0);
      const auto ref = dense_fit(x, y, std::vector<double>(n, 1.0), sp.lambda());
      for (std::size_t i = 0; i < n; ++i)
        CHECK(sp.knot_values()[i] == doctest::Approx(ref[i]).epsilon(1e-8));

      double rss = 0;
      for (std::size_t i = 0; i < n; ++i)
        rss += (y[i] - sp.knot_values()[i]) * (y[i] - sp.knot_values()[i]);
      const double budget = variance_budget(y, 0.05);
      CHECK(rss <= budget * (1 + 1e-12));
      CHECK(rss >= budget * 0.999); // the budget binds
    }
  }

  TEST_CASE("constant estimates pass through unchanged")
  {
    const std::vector<double> x{ 0.1, 0.5, 0.2, 0.9, 0.7 }, y(5, 0.42);
    CHECK(smooth_1d(x, y) == y);
  }

  TEST_CASE("zero coefficient interpolates")
  {
    const std::vector<double> x{ 0.0, 0.3, 0.5, 0.9, 1.4 }, y{ 1, 3, 2, 5, 4 };
    CHECK(smooth_1d(x, y, 0.0) == y);
  }

  TEST_CASE("linear data is reproduced")
  {
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
      x.push_back(0.1 * i * i);
      y.push_back(2.0 + 0.5 * x.back());
    }
    const auto s = smooth_1d(x, y);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(s[i] == doctest::Approx(y[i]).epsilon(1e-12));
  }

  TEST_CASE("weighted mean is preserved and output is non-negative")
  {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(200), y(200);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::floor(u(rng) * 120) / 120; // repeated knots
      y[i] = x[i] < 0.5 ? 0.0 : 2.0 + u(rng);
    }
    const SmoothingSpline sp(x, y);
    const auto& g = sp.knot_values();
    std::vector<double> cnt(g.size(), 0.0);
    for (double v : x)
      cnt[std::lower_bound(sp.knots().begin(), sp.knots().end(), v) - sp.knots().begin()] += 1;
    double wg = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      wg += cnt[i] * g[i];
    CHECK(wg == doctest::Approx(std::accumulate(y.begin(), y.end(), 0.0)).epsilon(1e-9));
    for (double v : smooth_1d(x, y))
      CHECK(v >= 0.0);
  }

  TEST_CASE("evaluation between and beyond knots")
  {
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
      x.push_back(i * 0.1);
      y.push_back(5 + std::sin(3 * x.back()) + (i % 2 ? 0.2 : -0.2));
    }
    const SmoothingSpline sp(x, y);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(sp(x[i]) == doctest::Approx(std::max(sp.knot_values()[i], 0.0)).epsilon(1e-12));
    // continuity across a knot
    CHECK(sp(0.5 - 1e-9) == doctest::Approx(sp(0.5 + 1e-9)).epsilon(1e-7));
    // linear beyond the ends
    const double a = sp(2.0), b = sp(2.5), c = sp(3.0);
    CHECK(b - a == doctest::Approx(c - b).epsilon(1e-9));
  }

  TEST_CASE("dimension and argument handling")
  {
    SampleSet q3(3, std::vector<double>(9, 0.5));
    const std::vector<double> raw{ 1, 2, 3 };
    CHECK(smooth(q3, raw) == raw);
    const std::vector<double> x{ 0, 1 };
    CHECK_THROWS_AS(smooth_1d(x, raw), LengthMismatch);
    CHECK(smooth_1d({}, {}).empty());
    CHECK_THROWS_AS(SmoothingSpline(x, x, -1.0), InvalidConfig);
    // one or two distinct knots fall back to the knot means
    const std::vector<double> x2{ 1, 1, 2 }, y2{ 1, 3, 5 };
    CHECK(smooth_1d(x2, y2) == std::vector<double>{ 2, 2, 5 });
  }
}
