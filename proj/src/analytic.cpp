#include "dde/analytic.hpp"

#include "dde/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace dde::analytic {
namespace {

using std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

// Gaussian row of the local-shape set has unit peak by construction.
constexpr double shape_sigma = 0.39894228040143267794; // 1 / sqrt(2 pi)
constexpr double shape_mu = 15.0;
constexpr double shape_alpha = 6.52326761054738;

constexpr double two_gauss_w1 = 0.7, two_gauss_mu1 = 5.0, two_gauss_s1 = 3.0;
constexpr double two_gauss_w2 = 0.3, two_gauss_mu2 = 0.0, two_gauss_s2 = 0.5;
constexpr double finger_w = 0.5, finger_sigma = 0.01;

double
normal_pdf(double x, double mu, double sigma)
{
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * pi));
}

double
normal_cdf(double x, double mu, double sigma)
{
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

double
finger_mu(std::size_t k) // k in 1..5
{
  return (2.0 * static_cast<double>(k) - 1.0) / 10.0;
}

struct Piece
{
  double lo, hi, p;
};

// Discontinuous density pieces partitioning [0, 1].
constexpr std::array<Piece, 5> disc_pieces{ { { 0.0, 0.3, 0.8 },
                                              { 0.3, 0.4, 1.25 },
                                              { 0.4, 0.5, 1.0 },
                                              { 0.5, 0.8, 1.25 },
                                              { 0.8, 1.0, 0.8 } } };

double
disc_density(double x)
{
  if (x < 0.0 || x > 1.0)
    return 0.0;
  if (x < 0.3 || x > 0.8)
    return 0.8;
  if (x > 0.4 && x < 0.5)
    return 1.0;
  return 1.25;
}

double
disc_cdf(double x)
{
  if (x <= 0.0)
    return 0.0;
  double c = 0.0;
  for (const auto& pc : disc_pieces) {
    if (x <= pc.lo)
      break;
    c += pc.p * (std::min(x, pc.hi) - pc.lo);
  }
  return std::min(c, 1.0);
}

double
disc_quantile(double u)
{
  double c = 0.0;
  for (const auto& pc : disc_pieces) {
    const double mass = pc.p * (pc.hi - pc.lo);
    if (u <= c + mass)
      return pc.lo + (u - c) / pc.p;
    c += mass;
  }
  return 1.0;
}

struct ShapeDef
{
  double lo, hi, t;
  std::string_view label;
};

const ShapeDef&
shape_def(std::size_t index)
{
  static const std::array<ShapeDef, local_shape_count> defs{ {
    { 0.5, 1.5, 1.0, "1 if 0.5 < x < 1.5" },
    { 0.0, 2.0, 2.0, "x/2 if x < 2" },
    { 0.0, 1.0, 0.5, "2x if x < 1" },
    { 0.0, pi / 2.0, pi / 2.0, "sin x if x < pi/2" },
    { pi / 3.0, 2.0 * pi / 3.0, pi / 2.0, "sin x if pi/3 < x < 2pi/3" },
    { 0.0, 30.0, shape_mu, "gaussian(mu=15, sigma=1/sqrt(2pi)) if x < 30" },
    { 0.0, std::cbrt(3.0), 1.0, "x^2 if x < 3^(1/3)" },
    { 0.0, std::cbrt(9.0), std::sqrt(3.0), "x^2/3 if x < 9^(1/3)" },
    { 1.5 * pi - pi / shape_alpha, 1.5 * pi + pi / shape_alpha, 1.5 * pi,
      "sin x + 2 if |x - 3pi/2| < pi/alpha" },
  } };
  return defs[index - 1];
}

double
shape_density(std::size_t index, double x)
{
  const auto& d = shape_def(index);
  if (x < d.lo || x > d.hi)
    return 0.0;
  switch (index) {
    case 1:
      return 1.0;
    case 2:
      return x / 2.0;
    case 3:
      return 2.0 * x;
    case 4:
    case 5:
      return std::sin(x);
    case 6: {
      const double z = (x - shape_mu) / shape_sigma;
      return std::exp(-0.5 * z * z);
    }
    case 7:
      return x * x;
    case 8:
      return x * x / 3.0;
    default:
      return std::sin(x) + 2.0;
  }
}

double
shape_cdf(std::size_t index, double x)
{
  const auto& d = shape_def(index);
  if (x <= d.lo)
    return 0.0;
  if (x >= d.hi)
    return 1.0;
  switch (index) {
    case 1:
      return x - d.lo;
    case 2:
      return x * x / 4.0;
    case 3:
      return x * x;
    case 4:
      return 1.0 - std::cos(x);
    case 5:
      return 0.5 - std::cos(x);
    case 6:
      return normal_cdf(x, shape_mu, shape_sigma);
    case 7:
      return x * x * x / 3.0;
    case 8:
      return x * x * x / 9.0;
    default:
      return 2.0 * (x - d.lo) - std::cos(x) + std::cos(d.lo);
  }
}

double
bisect_quantile(const AnalyticPdf& pdf, double u, double lo, double hi)
{
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (pdf.cdf(mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double
shape_quantile(const AnalyticPdf& pdf, std::size_t index, double u)
{
  const auto& d = shape_def(index);
  switch (index) {
    case 1:
      return d.lo + u;
    case 2:
      return 2.0 * std::sqrt(u);
    case 3:
      return std::sqrt(u);
    case 4:
      return std::acos(1.0 - u);
    case 5:
      return std::acos(0.5 - u);
    case 7:
      return std::cbrt(3.0 * u);
    case 8:
      return std::cbrt(9.0 * u);
    default:
      return bisect_quantile(pdf, u, d.lo, d.hi);
  }
}

} // namespace

AnalyticPdf
AnalyticPdf::cauchy(double b)
{
  if (!(b > 0.0) || !std::isfinite(b))
    throw InvalidConfig("cauchy scale must be positive");
  AnalyticPdf p(Kind::cauchy);
  p.b_ = b;
  return p;
}

AnalyticPdf
AnalyticPdf::local_shape(std::size_t index)
{
  if (index < 1 || index > local_shape_count)
    throw InvalidConfig("local shape index must be in 1..9");
  AnalyticPdf p(Kind::local_shape);
  p.shape_ = index;
  return p;
}

AnalyticPdf
AnalyticPdf::parse(std::string_view name)
{
  if (name == "gamma")
    return gamma();
  if (name == "two-gaussians")
    return two_gaussians();
  if (name == "five-fingers")
    return five_fingers();
  if (name == "discontinuous")
    return discontinuous();
  if (name == "cauchy")
    return cauchy();
  constexpr std::string_view cauchy_prefix = "cauchy:b=";
  if (name.starts_with(cauchy_prefix)) {
    const std::string v(name.substr(cauchy_prefix.size()));
    char* end = nullptr;
    const double b = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size())
      throw InvalidConfig("bad cauchy scale in '" + std::string(name) + "'");
    return cauchy(b);
  }
  constexpr std::string_view shape_prefix = "local-shape:";
  if (name.starts_with(shape_prefix)) {
    const auto v = name.substr(shape_prefix.size());
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), idx);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw InvalidConfig("bad local shape index in '" + std::string(name) +
                          "'");
    return local_shape(idx);
  }
  throw InvalidConfig("unknown distribution '" + std::string(name) + "'");
}

std::string
AnalyticPdf::name() const
{
  switch (kind_) {
    case Kind::gamma:
      return "gamma";
    case Kind::two_gaussians:
      return "two-gaussians";
    case Kind::five_fingers:
      return "five-fingers";
    case Kind::cauchy: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "cauchy:b=%g", b_);
      return buf;
    }
    case Kind::discontinuous:
      return "discontinuous";
    case Kind::local_shape:
      return "local-shape:" + std::to_string(shape_);
  }
  return {};
}

double
AnalyticPdf::density(double x) const
{
  switch (kind_) {
    case Kind::gamma:
      if (x < 0.0)
        return 0.0;
      if (x == 0.0)
        return inf;
      return std::exp(-x) / std::sqrt(pi * x);
    case Kind::two_gaussians:
      return two_gauss_w1 * normal_pdf(x, two_gauss_mu1, two_gauss_s1) +
             two_gauss_w2 * normal_pdf(x, two_gauss_mu2, two_gauss_s2);
    case Kind::five_fingers: {
      double p = (x >= 0.0 && x <= 1.0) ? 1.0 - finger_w : 0.0;
      for (std::size_t k = 1; k <= 5; ++k)
        p += finger_w * 0.2 * normal_pdf(x, finger_mu(k), finger_sigma);
      return p;
    }
    case Kind::cauchy:
      return b_ / (pi * (x * x + b_ * b_));
    case Kind::discontinuous:
      return disc_density(x);
    case Kind::local_shape:
      return shape_density(shape_, x);
  }
  return 0.0;
}

double
AnalyticPdf::cdf(double x) const
{
  switch (kind_) {
    case Kind::gamma:
      return x <= 0.0 ? 0.0 : std::erf(std::sqrt(x));
    case Kind::two_gaussians:
      return two_gauss_w1 * normal_cdf(x, two_gauss_mu1, two_gauss_s1) +
             two_gauss_w2 * normal_cdf(x, two_gauss_mu2, two_gauss_s2);
    case Kind::five_fingers: {
      double c = (1.0 - finger_w) * std::clamp(x, 0.0, 1.0);
      for (std::size_t k = 1; k <= 5; ++k)
        c += finger_w * 0.2 * normal_cdf(x, finger_mu(k), finger_sigma);
      return c;
    }
    case Kind::cauchy:
      return 0.5 + std::atan(x / b_) / pi;
    case Kind::discontinuous:
      return disc_cdf(x);
    case Kind::local_shape:
      return shape_cdf(shape_, x);
  }
  return 0.0;
}

double
AnalyticPdf::quantile(double u) const
{
  switch (kind_) {
    case Kind::cauchy:
      return b_ * std::tan(pi * (u - 0.5));
    case Kind::discontinuous:
      return disc_quantile(u);
    case Kind::local_shape:
      return shape_quantile(*this, shape_, u);
    case Kind::gamma: {
      double hi = 1.0;
      while (cdf(hi) < u)
        hi *= 2.0;
      return bisect_quantile(*this, u, 0.0, hi);
    }
    case Kind::two_gaussians:
      return bisect_quantile(*this, u, -20.0, 30.0);
    case Kind::five_fingers:
      return bisect_quantile(*this, u, -0.2, 1.2);
  }
  return 0.0;
}

std::pair<double, double>
AnalyticPdf::support() const
{
  switch (kind_) {
    case Kind::gamma:
      return { 0.0, inf };
    case Kind::discontinuous:
      return { 0.0, 1.0 };
    case Kind::local_shape: {
      const auto& d = shape_def(shape_);
      return { d.lo, d.hi };
    }
    default:
      return { -inf, inf };
  }
}

SampleSet
AnalyticPdf::sample(std::size_t n, Rng& rng) const
{
  std::vector<double> xs(n);
  for (auto& x : xs) {
    switch (kind_) {
      case Kind::gamma:
        do {
          const double z = standard_normal(rng);
          x = 0.5 * z * z;
        } while (x == 0.0);
        break;
      case Kind::two_gaussians:
        if (uniform01(rng) < two_gauss_w1)
          x = two_gauss_mu1 + two_gauss_s1 * standard_normal(rng);
        else
          x = two_gauss_mu2 + two_gauss_s2 * standard_normal(rng);
        break;
      case Kind::five_fingers:
        if (uniform01(rng) < finger_w) {
          const auto k = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
          x = finger_mu(k) + finger_sigma * standard_normal(rng);
        } else {
          x = uniform01(rng);
        }
        break;
      case Kind::cauchy:
        x = quantile(uniform01(rng));
        break;
      case Kind::local_shape:
        if (shape_ == 6) {
          do
            x = shape_mu + shape_sigma * standard_normal(rng);
          while (x < 0.0 || x > 30.0);
          break;
        }
        [[fallthrough]];
      case Kind::discontinuous: {
        double u;
        do
          u = uniform01(rng);
        while (u == 0.0);
        x = quantile(u);
        break;
      }
    }
  }
  std::vector<double> truth(n);
  for (std::size_t i = 0; i < n; ++i)
    truth[i] = density(xs[i]);
  SampleSet s(1, std::move(xs));
  s.set_density_truth(std::move(truth));
  return s;
}

std::pair<AnalyticPdf, double>
local_shape_query(std::size_t index)
{
  auto pdf = AnalyticPdf::local_shape(index);
  return { pdf, shape_def(index).t };
}

std::string_view
local_shape_label(std::size_t index)
{
  if (index < 1 || index > local_shape_count)
    throw InvalidConfig("local shape index must be in 1..9");
  return shape_def(index).label;
}

} // namespace dde::analytic
