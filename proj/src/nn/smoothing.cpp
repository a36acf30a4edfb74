#include "dde/nn/smoothing.hpp"

#include "dde/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace dde::nn {
namespace {

// Distinct knots with the mean response and multiplicity of each.
struct Knots
{
  std::vector<double> x, y, w;
  double within_ss = 0.0; // scatter of responses around knot means
};

Knots
merge_knots(std::span<const double> xs, std::span<const double> ys)
{
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  Knots k;
  std::vector<std::size_t> knot_of(xs.size());
  for (std::size_t i : order) {
    if (k.x.empty() || xs[i] != k.x.back()) {
      k.x.push_back(xs[i]);
      k.y.push_back(0.0);
      k.w.push_back(0.0);
    }
    k.y.back() += ys[i];
    k.w.back() += 1.0;
    knot_of[i] = k.x.size() - 1;
  }
  for (std::size_t j = 0; j < k.x.size(); ++j)
    k.y[j] /= k.w[j];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = ys[i] - k.y[knot_of[i]];
    k.within_ss += d * d;
  }
  return k;
}

struct Fit
{
  std::vector<double> g, gamma;
};

// Reinsch form of the penalized fit: (R + lambda Q' W^-1 Q) gamma = Q' y,
// g = y - lambda W^-1 Q gamma. R is tridiagonal and Q has three nonzeros per
// column, so the system is pentadiagonal and solved by banded Cholesky. The
// spacings h are measured in the caller's coordinates.
class SplineSystem
{
public:
  SplineSystem(const Knots& k, const std::vector<double>& h) : k_(k)
  {
    const std::size_t c = h.size() - 1;
    q_.resize(c);
    r0_.resize(c);
    r1_.assign(c, 0.0);
    qty_.resize(c);
    for (std::size_t j = 0; j < c; ++j) {
      q_[j] = { 1.0 / h[j], -1.0 / h[j] - 1.0 / h[j + 1], 1.0 / h[j + 1] };
      r0_[j] = (h[j] + h[j + 1]) / 3.0;
      if (j + 1 < c)
        r1_[j] = h[j + 1] / 6.0;
      qty_[j] =
        q_[j][0] * k.y[j] + q_[j][1] * k.y[j + 1] + q_[j][2] * k.y[j + 2];
    }
    p0_.assign(c, 0.0);
    p1_.assign(c, 0.0);
    p2_.assign(c, 0.0);
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t t = 0; t < 3; ++t)
        p0_[j] += q_[j][t] * q_[j][t] / k.w[j + t];
      if (j + 1 < c)
        for (std::size_t t = 1; t < 3; ++t)
          p1_[j] += q_[j][t] * q_[j + 1][t - 1] / k.w[j + t];
      if (j + 2 < c)
        p2_[j] = q_[j][2] * q_[j + 2][0] / k.w[j + 2];
    }
  }

  Fit solve(double lambda) const
  {
    const std::size_t c = r0_.size();
    std::vector<double> l0(c), l1(c, 0.0), l2(c, 0.0), g(c);
    for (std::size_t j = 0; j < c; ++j) {
      double d = r0_[j] + lambda * p0_[j];
      if (j >= 1)
        d -= l1[j - 1] * l1[j - 1];
      if (j >= 2)
        d -= l2[j - 2] * l2[j - 2];
      l0[j] = std::sqrt(std::max(d, std::numeric_limits<double>::min()));
      if (j + 1 < c) {
        double e = r1_[j] + lambda * p1_[j];
        if (j >= 1)
          e -= l1[j - 1] * l2[j - 1];
        l1[j] = e / l0[j];
      }
      if (j + 2 < c)
        l2[j] = lambda * p2_[j] / l0[j];
    }
    for (std::size_t j = 0; j < c; ++j) {
      double s = qty_[j];
      if (j >= 1)
        s -= l1[j - 1] * g[j - 1];
      if (j >= 2)
        s -= l2[j - 2] * g[j - 2];
      g[j] = s / l0[j];
    }
    for (std::size_t j = c; j-- > 0;) {
      double s = g[j];
      if (j + 1 < c)
        s -= l1[j] * g[j + 1];
      if (j + 2 < c)
        s -= l2[j] * g[j + 2];
      g[j] = s / l0[j];
    }
    Fit f;
    f.gamma.assign(c + 2, 0.0);
    std::copy(g.begin(), g.end(), f.gamma.begin() + 1);
    std::vector<double> res(c + 2, 0.0);
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t t = 0; t < 3; ++t)
        res[j + t] += q_[j][t] * g[j];
    f.g.resize(c + 2);
    for (std::size_t i = 0; i < res.size(); ++i)
      f.g[i] = k_.y[i] - lambda * res[i] / k_.w[i];
    return f;
  }

  double rss(const Fit& f) const
  {
    double s = k_.within_ss;
    for (std::size_t i = 0; i < f.g.size(); ++i) {
      const double r = k_.y[i] - f.g[i];
      s += k_.w[i] * r * r;
    }
    return s;
  }

private:
  const Knots& k_;
  std::vector<std::array<double, 3>> q_;
  std::vector<double> r0_, r1_, qty_, p0_, p1_, p2_;
};

std::vector<double>
linear_fit(const Knots& k)
{
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < k.x.size(); ++i) {
    sw += k.w[i];
    sx += k.w[i] * k.x[i];
    sy += k.w[i] * k.y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k.x.size(); ++i) {
    sxx += k.w[i] * (k.x[i] - mx) * (k.x[i] - mx);
    sxy += k.w[i] * (k.x[i] - mx) * (k.y[i] - my);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  std::vector<double> f(k.x.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = my + slope * (k.x[i] - mx);
  return f;
}

} // namespace

SmoothingSpline::SmoothingSpline(std::span<const double> xs,
                                 std::span<const double> ys,
                                 double coefficient)
{
  if (xs.size() != ys.size())
    throw LengthMismatch(std::to_string(xs.size()) + " knots, " +
                         std::to_string(ys.size()) + " values");
  if (xs.empty())
    throw EmptySample("smoothing spline needs at least one point");
  if (!(coefficient >= 0.0))
    throw InvalidConfig("smoothing coefficient must be non-negative");
  const std::size_t m = ys.size();
  const double md = static_cast<double>(m);
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / md;
  double var = 0.0;
  for (double v : ys)
    var += (v - mean) * (v - mean);
  const double budget = var / md * md * coefficient;

  const Knots k = merge_knots(xs, ys);
  x_ = k.x;
  const std::size_t n = x_.size();
  if (n < 3) {
    g_ = k.y;
    gamma_.assign(n, 0.0);
    return;
  }
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    h[i] = x_[i + 1] - x_[i];
  const SplineSystem sys(k, h);

  if (budget <= k.within_ss) {
    // No slack beyond the knot-mean scatter: interpolate.
    auto f = sys.solve(0.0);
    g_ = k.y;
    gamma_ = std::move(f.gamma);
    return;
  }
  const auto line = linear_fit(k);
  double line_rss = k.within_ss;
  for (std::size_t i = 0; i < n; ++i)
    line_rss += k.w[i] * (k.y[i] - line[i]) * (k.y[i] - line[i]);
  if (line_rss <= budget) {
    g_ = line;
    gamma_.assign(n, 0.0);
    lambda_ = std::numeric_limits<double>::infinity();
    return;
  }
  // The residual sum of squares grows with lambda. Bisect in log lambda on a
  // range scaled to the knot span (lambda carries units of length^3) and
  // keep the feasible end.
  const double span = x_.back() - x_.front();
  const double unit = span * span * span;
  double lo = std::log(1e-24 * unit), hi = std::log(1e6 * unit);
  Fit best = sys.solve(std::exp(lo));
  double best_lambda = std::exp(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
    const double mid = 0.5 * (lo + hi);
    Fit f = sys.solve(std::exp(mid));
    if (sys.rss(f) <= budget) {
      lo = mid;
      best = std::move(f);
      best_lambda = std::exp(mid);
    } else {
      hi = mid;
    }
  }
  g_ = std::move(best.g);
  gamma_ = std::move(best.gamma);
  lambda_ = best_lambda;
}

double
SmoothingSpline::operator()(double x) const
{
  const std::size_t n = x_.size();
  double v;
  if (n == 1) {
    v = g_[0];
  } else if (x <= x_.front()) {
    const double h = x_[1] - x_[0];
    const double slope = (g_[1] - g_[0]) / h - h * gamma_[1] / 6.0;
    v = g_[0] + slope * (x - x_[0]);
  } else if (x >= x_.back()) {
    const double h = x_[n - 1] - x_[n - 2];
    const double slope = (g_[n - 1] - g_[n - 2]) / h + h * gamma_[n - 2] / 6.0;
    v = g_[n - 1] + slope * (x - x_[n - 1]);
  } else {
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double a = x - x_[i], b = x_[i + 1] - x;
    v = (a * g_[i + 1] + b * g_[i]) / h -
        a * b / 6.0 * ((1.0 + a / h) * gamma_[i + 1] + (1.0 + b / h) * gamma_[i]);
    if (a == 0.0)
      v = g_[i];
  }
  return std::max(v, 0.0);
}

std::vector<double>
SmoothingSpline::operator()(std::span<const double> xs) const
{
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[i] = (*this)(xs[i]);
  return out;
}

std::vector<double>
smooth_1d(std::span<const double> xs,
          std::span<const double> raw,
          double coefficient)
{
  if (xs.size() != raw.size())
    throw LengthMismatch(std::to_string(xs.size()) + " query points, " +
                         std::to_string(raw.size()) + " estimates");
  if (xs.empty())
    return {};
  return SmoothingSpline(xs, raw, coefficient)(xs);
}

std::vector<double>
smooth(const SampleSet& queries, std::span<const double> raw, double coefficient)
{
  if (queries.dim() != 1)
    return { raw.begin(), raw.end() };
  const auto xs = queries.axis_values(0);
  return smooth_1d(xs, raw, coefficient);
}

} // namespace dde::nn
