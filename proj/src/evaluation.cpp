#include "dde/evaluation.hpp"

#include "dde/analytic.hpp"
#include "dde/baselines/kde.hpp"
#include "dde/error.hpp"
#include "dde/io.hpp"
#include "dde/nn/estimate.hpp"
#include "dde/synthpdf/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <memory>
#include <numeric>
#include <ostream>
#include <tuple>

namespace dde::eval {
namespace {

std::uint64_t
fnv1a(std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const nn::Mlp&
require_model(const Estimator& est)
{
  if (!est.model)
    throw InvalidConfig(std::string("estimator '") + estimator_name(est.kind) +
                        "' needs a trained model");
  return *est.model;
}

SampleSet
grid_queries(const std::vector<double>& xs)
{
  return SampleSet(1, xs);
}

} // namespace

const char*
estimator_name(EstimatorKind k)
{
  switch (k) {
    case EstimatorKind::kde:
      return "kde";
    case EstimatorKind::dde:
      return "dde";
    case EstimatorKind::dde_smooth:
      return "dde-smooth";
  }
  return "?";
}

EstimatorKind
estimator_from_name(std::string_view name)
{
  for (auto k : { EstimatorKind::kde, EstimatorKind::dde, EstimatorKind::dde_smooth })
    if (name == estimator_name(k))
      return k;
  throw InvalidConfig("unknown estimator '" + std::string(name) +
                      "' (expected kde, dde or dde-smooth)");
}

std::vector<double>
run_estimator(const Estimator& est, const SampleSet& sample, const SampleSet& queries)
{
  switch (est.kind) {
    case EstimatorKind::kde:
      return baselines::KdeEstimator(sample).evaluate(queries);
    case EstimatorKind::dde:
      return nn::estimate(require_model(est), sample, queries);
    case EstimatorKind::dde_smooth: {
      const auto& model = require_model(est);
      if (sample.dim() != 1)
        return nn::estimate(model, sample, queries);
      const auto raw = nn::estimate(model, sample);
      const nn::SmoothingSpline spline(sample.axis_values(0), raw,
                                       est.smoothing_coefficient);
      return spline(queries.axis_values(0));
    }
  }
  return {};
}

std::vector<double>
self_estimate(const Estimator& est, const SampleSet& sample)
{
  return run_estimator(est, sample, sample);
}

Distribution
analytic_distribution(std::string_view name)
{
  auto pdf = std::make_shared<analytic::AnalyticPdf>(analytic::AnalyticPdf::parse(name));
  Distribution d;
  d.id = pdf->name();
  d.dim = 1;
  d.draw = [pdf](std::size_t n, Rng& rng) { return pdf->sample(n, rng); };
  d.truth = [pdf](std::span<const double> x) { return pdf->density(x[0]); };
  return d;
}

std::vector<Distribution>
expand_distribution(const std::string& spec)
{
  std::vector<Distribution> out;
  if (spec == "local-shape:all") {
    for (std::size_t i = 1; i <= analytic::local_shape_count; ++i)
      out.push_back(analytic_distribution("local-shape:" + std::to_string(i)));
    return out;
  }
  std::error_code ec;
  if (std::filesystem::is_directory(spec, ec)) {
    auto ds = std::make_shared<synthpdf::Dataset>(synthpdf::read_dataset(spec));
    const std::string stem = std::filesystem::path(spec).lexically_normal()
                               .filename()
                               .string();
    for (std::size_t i = 0; i < ds->items.size(); ++i) {
      const auto& pdf = ds->items[i].pdf;
      if (pdf.expr.empty())
        throw FormatError(spec + ": PDF " + std::to_string(i) +
                          " has no stored definition");
      char buf[32];
      std::snprintf(buf, sizeof buf, "#%06zu", i);
      Distribution d;
      d.id = (stem.empty() ? std::string("dataset") : stem) + buf;
      d.dim = pdf.dim();
      d.draw = [ds, i](std::size_t n, Rng& rng) {
        return synthpdf::rejection_sample(ds->items[i].pdf, n, rng);
      };
      d.truth = [ds, i](std::span<const double> u) {
        const auto& p = ds->items[i].pdf;
        std::vector<double> x(u.size());
        double jac = 1.0;
        for (std::size_t a = 0; a < u.size(); ++a) {
          x[a] = p.domain[a].lo + u[a] * p.domain[a].width();
          jac *= p.domain[a].width();
        }
        return p.density(x) * jac;
      };
      out.push_back(std::move(d));
    }
    return out;
  }
  out.push_back(analytic_distribution(spec));
  return out;
}

std::uint64_t
sample_seed(std::string_view distribution, std::uint64_t seed)
{
  return child_seed(seed, fnv1a(distribution));
}

CaseResult
evaluate_case(const Distribution& dist,
              std::size_t n,
              std::uint64_t seed,
              const std::vector<Estimator>& estimators,
              const EvalOptions& opts,
              bool want_plot)
{
  Rng rng = make_rng(sample_seed(dist.id, seed));
  const SampleSet sample = dist.draw(n, rng);
  const auto& truth = *sample.density_truth();

  const bool one_d = sample.dim() == 1;
  const bool need_grid = one_d && (opts.ks || want_plot);
  std::vector<double> grid;
  if (need_grid)
    grid = metrics::estimate_grid_1d(sample, opts.grid_points);

  CaseResult res;
  if (want_plot && one_d) {
    res.plot.x = grid;
    res.plot.truth.reserve(grid.size());
    for (double x : grid)
      res.plot.truth.push_back(dist.truth(std::span(&x, 1)));
  }
  for (const auto& est : estimators) {
    metrics::EvalReport r;
    r.estimator = est.name();
    r.distribution = dist.id;
    r.n = n;
    r.d = sample.dim();
    r.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    const auto p_hat = self_estimate(est, sample);
    r.time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.mse = metrics::mse(truth, p_hat);
    r.kl = metrics::kl_mc(truth, p_hat, opts.kl_floor);
    if (need_grid) {
      const auto on_grid = run_estimator(est, sample, grid_queries(grid));
      if (opts.ks) {
        Rng ks_rng = make_rng(child_seed(sample_seed(dist.id, seed), fnv1a(r.estimator)));
        const auto drawn = metrics::sample_from_grid(grid, on_grid, n, ks_rng);
        r.ks_p = metrics::ks_two_sample(sample.axis_values(0), drawn).p;
      }
      if (want_plot) {
        res.plot.estimators.push_back(r.estimator);
        res.plot.estimates.push_back(on_grid);
      }
    }
    res.reports.push_back(std::move(r));
  }
  return res;
}

void
sort_reports(std::vector<metrics::EvalReport>& rows)
{
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.estimator, a.distribution, a.n, a.d, a.seed) <
           std::tie(b.estimator, b.distribution, b.n, b.d, b.seed);
  });
}

double
LocalShapeTable::mean(std::size_t estimator) const
{
  const auto& v = values.at(estimator);
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

LocalShapeTable
local_shape_table(std::size_t n,
                  std::uint64_t seed,
                  const std::vector<Estimator>& estimators)
{
  LocalShapeTable t;
  t.n = n;
  t.seed = seed;
  for (const auto& e : estimators)
    t.estimators.push_back(e.name());
  t.values.assign(estimators.size(), {});
  for (std::size_t i = 1; i <= analytic::local_shape_count; ++i) {
    const auto [pdf, at] = analytic::local_shape_query(i);
    Rng rng = make_rng(sample_seed(pdf.name(), seed));
    const SampleSet sample = pdf.sample(n, rng);
    const SampleSet q(1, { at });
    for (std::size_t e = 0; e < estimators.size(); ++e)
      t.values[e].push_back(run_estimator(estimators[e], sample, q)[0]);
  }
  return t;
}

void
write_local_shape_table(std::ostream& os, const LocalShapeTable& t)
{
  char buf[128];
  os << "Density estimate at t, true value 1 (n=" << t.n << ", seed=" << t.seed
     << ")\n";
  std::snprintf(buf, sizeof buf, "%-3s %-46s %10s", "#", "shape", "t");
  os << buf;
  for (const auto& e : t.estimators) {
    std::snprintf(buf, sizeof buf, " %12s", e.c_str());
    os << buf;
  }
  os << '\n';
  for (std::size_t i = 1; i <= analytic::local_shape_count; ++i) {
    const auto [pdf, at] = analytic::local_shape_query(i);
    std::snprintf(buf, sizeof buf, "%-3zu %-46s %10.6f", i,
                  std::string(analytic::local_shape_label(i)).c_str(), at);
    os << buf;
    for (const auto& col : t.values) {
      std::snprintf(buf, sizeof buf, " %12.4f", col[i - 1]);
      os << buf;
    }
    os << '\n';
  }
  std::snprintf(buf, sizeof buf, "%-3s %-46s %10s", "", "Mean", "");
  os << buf;
  for (std::size_t e = 0; e < t.values.size(); ++e) {
    std::snprintf(buf, sizeof buf, " %12.4f", t.mean(e));
    os << buf;
  }
  os << '\n';
}

void
write_plot_csv(const PlotData& p, const std::filesystem::path& path)
{
  io::CsvTable t;
  t.header = { "x", "truth" };
  for (const auto& e : p.estimators)
    t.header.push_back(e);
  t.rows.reserve(p.x.size());
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    std::vector<double> row{ p.x[i], p.truth[i] };
    for (const auto& col : p.estimates)
      row.push_back(col[i]);
    t.rows.push_back(std::move(row));
  }
  io::write_csv(path, t);
}

std::string
plot_file_name(std::string_view distribution, std::size_t n, std::uint64_t seed)
{
  std::string s;
  for (char c : distribution)
    s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return "plot_" + s + "_n" + std::to_string(n) + "_s" + std::to_string(seed) + ".csv";
}

} // namespace dde::eval
