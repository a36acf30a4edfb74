#pragma once

#include "dde/sample_set.hpp"

#include <span>
#include <vector>

namespace dde::baselines {

/// Per-axis Silverman rule h_j = sigma_j (4 / ((d + 2) n))^(1 / (d + 4)),
/// sigma_j the sample standard deviation (ddof = 1). Throws DegenerateSample
/// when n < 2 or some sigma_j = 0.
std::vector<double>
silverman_bandwidth(const SampleSet& sample);

/// Product-Gaussian kernel density estimator, evaluated exactly in O(n m).
class KdeEstimator
{
public:
  /// Silverman bandwidths.
  explicit KdeEstimator(SampleSet sample);
  /// Explicit bandwidths; throws InvalidConfig unless all are positive and
  /// there is one per axis.
  KdeEstimator(SampleSet sample, std::vector<double> bandwidth);

  const SampleSet& sample() const { return sample_; }
  const std::vector<double>& bandwidth() const { return h_; }

  double density(std::span<const double> x) const;
  std::vector<double> evaluate(const SampleSet& queries) const;

private:
  SampleSet sample_;
  std::vector<double> h_;
  double norm_ = 0.0; // 1 / (n prod_j h_j sqrt(2 pi))
};

std::vector<double>
kde_estimate(const KdeEstimator& kde, const SampleSet& queries);

} // namespace dde::baselines
