#pragma once

#include "dde/rng.hpp"
#include "dde/sample_set.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dde::metrics {

inline constexpr double default_kl_floor = 1e-12;

/// Mean of (truth - estimate)^2. Throws LengthMismatch.
double
mse(std::span<const double> truth, std::span<const double> estimate);

/// Monte Carlo D_KL(p || p_hat) using the sample points as nodes:
/// mean of log(truth / max(estimate, floor)). Throws LengthMismatch.
double
kl_mc(std::span<const double> truth,
      std::span<const double> estimate,
      double floor = default_kl_floor);

struct KsResult
{
  double d = 0.0;
  double p = 1.0;
};

/// Asymptotic Kolmogorov tail probability for statistic d with effective
/// size n_e = n1 n2 / (n1 + n2).
double
ks_p_value(double d, double n_effective);

/// Two-sample Kolmogorov-Smirnov test. Throws EmptySample.
KsResult
ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample statistic sup |F_n - F| for a continuous CDF.
double
ks_one_sample_statistic(std::span<const double> sample,
                        const std::function<double(double)>& cdf);

/// 2048 uniform nodes over [min - 3h, max + 3h], h the Silverman bandwidth of
/// the 1D input sample.
std::vector<double>
estimate_grid_1d(const SampleSet& input, std::size_t points = 2048);

/// Inverse-transform sampling of the piecewise-linear CDF built from density
/// values on sorted nodes (negatives clamped to 0, trapezoid cell masses).
/// n = 0 gives an empty result; otherwise throws AllZero when the grid mass
/// is 0.
std::vector<double>
sample_from_grid(std::span<const double> xs,
                 std::span<const double> density,
                 std::size_t n,
                 Rng& rng);

/// Evaluates `estimator` on estimate_grid_1d(input) and samples n points.
std::vector<double>
sample_from_estimate_1d(
  const SampleSet& input,
  const std::function<std::vector<double>(const SampleSet&)>& estimator,
  std::size_t n,
  Rng& rng);

struct EvalReport
{
  std::string estimator;
  std::string distribution;
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  double kl = 0.0;
  std::optional<double> ks_p;
  double time_s = 0.0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline constexpr const char* report_csv_header =
  "estimator,distribution,n,d,seed,mse,kl,ks_p,time_s";

/// One CSV line (no newline); ks_p is empty when absent.
std::string
to_csv_row(const EvalReport& r);
EvalReport
from_csv_row(const std::string& line);

void
write_reports_csv(std::ostream& os, const std::vector<EvalReport>& rows);
std::vector<EvalReport>
read_reports_csv(std::istream& is);

} // namespace dde::metrics
