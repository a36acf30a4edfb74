#include "dde/baselines/kde.hpp"

#include "dde/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace dde::baselines {

std::vector<double>
silverman_bandwidth(const SampleSet& sample)
{
  const std::size_t n = sample.size(), d = sample.dim();
  if (n < 2)
    throw DegenerateSample("Silverman bandwidth needs at least 2 points, got " +
                           std::to_string(n));
  const double nd = static_cast<double>(n), dd = static_cast<double>(d);
  const double factor = std::pow(4.0 / ((dd + 2.0) * nd), 1.0 / (dd + 4.0));
  std::vector<double> h(d);
  for (std::size_t a = 0; a < d; ++a) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean += sample.point(i)[a];
    mean /= nd;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = sample.point(i)[a] - mean;
      ss += r * r;
    }
    const double sigma = std::sqrt(ss / (nd - 1.0));
    if (!(sigma > 0.0))
      throw DegenerateSample("axis " + std::to_string(a) +
                             " has zero standard deviation");
    h[a] = sigma * factor;
  }
  return h;
}

KdeEstimator::KdeEstimator(SampleSet sample)
  : KdeEstimator(sample, silverman_bandwidth(sample))
{}

KdeEstimator::KdeEstimator(SampleSet sample, std::vector<double> bandwidth)
  : sample_(std::move(sample)), h_(std::move(bandwidth))
{
  if (sample_.empty())
    throw EmptySample("KDE needs at least one point");
  if (h_.size() != sample_.dim())
    throw InvalidConfig("need one bandwidth per axis");
  double prod = static_cast<double>(sample_.size());
  for (double h : h_) {
    if (!(h > 0.0) || !std::isfinite(h))
      throw InvalidConfig("bandwidths must be positive and finite");
    prod *= h * std::sqrt(2.0 * std::numbers::pi);
  }
  norm_ = 1.0 / prod;
}

double
KdeEstimator::density(std::span<const double> x) const
{
  if (x.size() != sample_.dim())
    throw ShapeMismatch("query dimension does not match the KDE sample");
  const std::size_t d = sample_.dim();
  const double* pts = sample_.coords().data();
  double sum = 0.0;
  for (std::size_t i = 0; i < sample_.size(); ++i) {
    double q = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double z = (x[a] - pts[i * d + a]) / h_[a];
      q += z * z;
    }
    sum += std::exp(-0.5 * q);
  }
  return sum * norm_;
}

std::vector<double>
KdeEstimator::evaluate(const SampleSet& queries) const
{
  if (queries.dim() != sample_.dim())
    throw ShapeMismatch("query dimension does not match the KDE sample");
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    out[i] = density(queries.point(i));
  return out;
}

std::vector<double>
kde_estimate(const KdeEstimator& kde, const SampleSet& queries)
{
  return kde.evaluate(queries);
}

} // namespace dde::baselines
