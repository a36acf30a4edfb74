#include "dde/metrics.hpp"

#include "dde/baselines/kde.hpp"
#include "dde/error.hpp"
#include "dde/io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace dde::metrics {
namespace {

void
check_lengths(std::span<const double> a, std::span<const double> b)
{
  if (a.size() != b.size())
    throw LengthMismatch(std::to_string(a.size()) + " truth values, " +
                         std::to_string(b.size()) + " estimates");
}

double
parse_double(const std::string& s)
{
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw FormatError("not a number '" + s + "'");
  return v;
}

std::uint64_t
parse_uint(const std::string& s)
{
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw FormatError("not an unsigned integer '" + s + "'");
  return std::stoull(s);
}

} // namespace

double
mse(std::span<const double> truth, std::span<const double> estimate)
{
  check_lengths(truth, estimate);
  if (truth.empty())
    throw EmptySample("mse of empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double r = truth[i] - estimate[i];
    s += r * r;
  }
  return s / static_cast<double>(truth.size());
}

double
kl_mc(std::span<const double> truth,
      std::span<const double> estimate,
      double floor)
{
  check_lengths(truth, estimate);
  if (truth.empty())
    throw EmptySample("KL of empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    s += std::log(truth[i] / std::max(estimate[i], floor));
  return s / static_cast<double>(truth.size());
}

double
ks_p_value(double d, double n_effective)
{
  const double sn = std::sqrt(n_effective);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  // Below 0.2 the tail probability differs from 1 by less than 1e-11 and the
  // alternating series converges too slowly to be summed directly.
  if (lambda < 0.2)
    return 1.0;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    p += (j % 2 == 1 ? 2.0 : -2.0) * term;
  }
  return std::clamp(p, 0.0, 1.0);
}

KsResult
ks_two_sample(std::span<const double> a, std::span<const double> b)
{
  if (a.empty() || b.empty())
    throw EmptySample("KS test needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v)
      ++i;
    while (j < y.size() && y[j] == v)
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 -
                             static_cast<double>(j) / n2));
  }
  return { d, ks_p_value(d, n1 * n2 / (n1 + n2)) };
}

double
ks_one_sample_statistic(std::span<const double> sample,
                        const std::function<double(double)>& cdf)
{
  if (sample.empty())
    throw EmptySample("KS test needs a non-empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({ d, static_cast<double>(i + 1) / n - f,
                   f - static_cast<double>(i) / n });
  }
  return d;
}

std::vector<double>
estimate_grid_1d(const SampleSet& input, std::size_t points)
{
  if (input.dim() != 1)
    throw ShapeMismatch("grid sampling is defined for 1D samples only");
  if (points < 2)
    throw InvalidConfig("grid needs at least 2 points");
  const double h = baselines::silverman_bandwidth(input)[0];
  const auto [lo_it, hi_it] =
    std::minmax_element(input.coords().begin(), input.coords().end());
  const double lo = *lo_it - 3.0 * h, hi = *hi_it + 3.0 * h;
  std::vector<double> xs(points);
  for (std::size_t i = 0; i < points; ++i)
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return xs;
}

std::vector<double>
sample_from_grid(std::span<const double> xs,
                 std::span<const double> density,
                 std::size_t n,
                 Rng& rng)
{
  check_lengths(xs, density);
  if (n == 0)
    return {};
  if (xs.size() < 2)
    throw InvalidConfig("grid needs at least 2 points");
  std::vector<double> cdf(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double p0 = std::max(density[i - 1], 0.0);
    const double p1 = std::max(density[i], 0.0);
    cdf[i] = cdf[i - 1] + 0.5 * (p0 + p1) * (xs[i] - xs[i - 1]);
  }
  const double total = cdf.back();
  if (!(total > 0.0) || !std::isfinite(total))
    throw AllZero("estimated density has no mass on the sampling grid");
  std::vector<double> out(n);
  for (auto& v : out) {
    const double u = uniform01(rng) * total;
    // First node with cdf > u; sample uniformly within that cell.
    auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
    if (it == cdf.end())
      it = cdf.end() - 1;
    const std::size_t c = static_cast<std::size_t>(it - cdf.begin());
    const double mass = cdf[c] - cdf[c - 1];
    const double frac = mass > 0.0 ? (u - cdf[c - 1]) / mass : 0.5;
    v = xs[c - 1] + std::clamp(frac, 0.0, 1.0) * (xs[c] - xs[c - 1]);
  }
  return out;
}

std::vector<double>
sample_from_estimate_1d(
  const SampleSet& input,
  const std::function<std::vector<double>(const SampleSet&)>& estimator,
  std::size_t n,
  Rng& rng)
{
  if (n == 0)
    return {};
  auto xs = estimate_grid_1d(input);
  const auto p = estimator(SampleSet(1, xs));
  return sample_from_grid(xs, p, n, rng);
}

nlohmann::json
EvalReport::to_json() const
{
  nlohmann::json j{ { "estimator", estimator }, { "distribution", distribution },
                    { "n", n },                 { "d", d },
                    { "seed", seed },           { "mse", mse },
                    { "kl", kl },               { "time_s", time_s } };
  j["ks_p"] = ks_p ? nlohmann::json(*ks_p) : nlohmann::json(nullptr);
  return j;
}

EvalReport
EvalReport::from_json(const nlohmann::json& j)
{
  try {
    EvalReport r;
    r.estimator = j.at("estimator").get<std::string>();
    r.distribution = j.at("distribution").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.d = j.at("d").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mse = j.at("mse").get<double>();
    r.kl = j.at("kl").get<double>();
    if (!j.at("ks_p").is_null())
      r.ks_p = j.at("ks_p").get<double>();
    r.time_s = j.at("time_s").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed eval report: ") + e.what());
  }
}

std::string
to_csv_row(const EvalReport& r)
{
  std::string s = r.estimator + "," + r.distribution + "," +
                  std::to_string(r.n) + "," + std::to_string(r.d) + "," +
                  std::to_string(r.seed) + "," + io::format_double(r.mse) +
                  "," + io::format_double(r.kl) + ",";
  if (r.ks_p)
    s += io::format_double(*r.ks_p);
  s += "," + io::format_double(r.time_s);
  return s;
}

EvalReport
from_csv_row(const std::string& line)
{
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ','))
    f.push_back(field);
  if (!line.empty() && line.back() == ',')
    f.emplace_back();
  if (f.size() != 9)
    throw FormatError("eval report row needs 9 fields: '" + line + "'");
  EvalReport r;
  r.estimator = f[0];
  r.distribution = f[1];
  r.n = parse_uint(f[2]);
  r.d = parse_uint(f[3]);
  r.seed = parse_uint(f[4]);
  r.mse = parse_double(f[5]);
  r.kl = parse_double(f[6]);
  if (!f[7].empty())
    r.ks_p = parse_double(f[7]);
  r.time_s = parse_double(f[8]);
  return r;
}

void
write_reports_csv(std::ostream& os, const std::vector<EvalReport>& rows)
{
  os << report_csv_header << '\n';
  for (const auto& r : rows)
    os << to_csv_row(r) << '\n';
}

std::vector<EvalReport>
read_reports_csv(std::istream& is)
{
  std::string line;
  if (!std::getline(is, line) || line != report_csv_header)
    throw FormatError("eval report CSV must start with the standard header");
  std::vector<EvalReport> rows;
  while (std::getline(is, line))
    if (!line.empty())
      rows.push_back(from_csv_row(line));
  return rows;
}

} // namespace dde::metrics
