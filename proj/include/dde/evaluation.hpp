#pragma once

#include "dde/metrics.hpp"
#include "dde/nn/mlp.hpp"
#include "dde/nn/smoothing.hpp"
#include "dde/rng.hpp"
#include "dde/sample_set.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Benchmark protocol shared by the command-line tool and the acceptance
// checks: draw a sample from a known law, estimate at the sample points,
// score against the truth, and (in 1D) compare the input sample with one
// drawn from the estimate.

namespace dde::eval {

enum class EstimatorKind
{
  kde,        // product Gaussian, Silverman bandwidth
  dde,        // learned estimator, raw network output
  dde_smooth, // learned estimator followed by the 1D smoothing spline
};

const char*
estimator_name(EstimatorKind k);
/// Throws InvalidConfig for unknown names.
EstimatorKind
estimator_from_name(std::string_view name);

struct Estimator
{
  EstimatorKind kind = EstimatorKind::kde;
  const nn::Mlp* model = nullptr; // required for dde and dde_smooth
  double smoothing_coefficient = nn::default_smoothing_coefficient;

  std::string name() const { return estimator_name(kind); }
};

/// Density estimates at `queries` from `sample`. dde_smooth fits the spline
/// to the self-estimates at the sample points and evaluates it at the
/// queries; for d > 1 it equals dde.
std::vector<double>
run_estimator(const Estimator& est, const SampleSet& sample, const SampleSet& queries);

/// run_estimator with queries = sample.
std::vector<double>
self_estimate(const Estimator& est, const SampleSet& sample);

/// A law to benchmark against. `draw` returns n points with density_truth
/// set; `truth` evaluates the density in the same coordinates.
struct Distribution
{
  std::string id;
  std::size_t dim = 1;
  std::function<SampleSet(std::size_t, Rng&)> draw;
  std::function<double(std::span<const double>)> truth;
};

/// Named analytic law (see AnalyticPdf::parse).
Distribution
analytic_distribution(std::string_view name);

/// Expands a selection: `local-shape:all` gives the nine local shapes, an
/// existing directory gives one entry per synthetic PDF of the dataset
/// (sampled in unit-range coordinates), anything else is an analytic name.
/// Throws InvalidConfig for unknown names.
std::vector<Distribution>
expand_distribution(const std::string& spec);

struct EvalOptions
{
  double kl_floor = metrics::default_kl_floor;
  bool ks = true;
  std::size_t grid_points = 2048;
};

/// Grid values of every estimator and the truth for one 1D run.
struct PlotData
{
  std::vector<double> x;
  std::vector<double> truth;
  std::vector<std::string> estimators;
  std::vector<std::vector<double>> estimates;
};

struct CaseResult
{
  std::vector<metrics::EvalReport> reports; // one per estimator, input order
  PlotData plot;                            // empty unless requested (1D)
};

/// Seed of the input sample for (distribution, seed). Every estimator sees
/// the same draw.
std::uint64_t
sample_seed(std::string_view distribution, std::uint64_t seed);

/// Runs every estimator on one draw of n points. time_s covers estimation at
/// the sample points only. KS is reported for d = 1 when enabled.
CaseResult
evaluate_case(const Distribution& dist,
              std::size_t n,
              std::uint64_t seed,
              const std::vector<Estimator>& estimators,
              const EvalOptions& opts = {},
              bool want_plot = false);

/// Orders reports by (estimator, distribution, n, d, seed).
void
sort_reports(std::vector<metrics::EvalReport>& rows);

/// Estimates at the local-shape query points t, one column per estimator.
struct LocalShapeTable
{
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> estimators;
  std::vector<std::vector<double>> values; // [estimator][shape]

  double mean(std::size_t estimator) const;
};

/// Samples drawn exactly as evaluate_case draws them for local-shape:<i>.
LocalShapeTable
local_shape_table(std::size_t n,
                  std::uint64_t seed,
                  const std::vector<Estimator>& estimators);

void
write_local_shape_table(std::ostream& os, const LocalShapeTable& t);

/// CSV with columns x, truth, then one column per estimator.
void
write_plot_csv(const PlotData& p, const std::filesystem::path& path);

/// File-system friendly form of a distribution id.
std::string
plot_file_name(std::string_view distribution, std::size_t n, std::uint64_t seed);

} // namespace dde::eval
