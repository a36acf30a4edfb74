#include "dde/synthpdf/synthetic_pdf.hpp"

#include "dde/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dde::synthpdf {
namespace {

constexpr std::size_t mc_probes = 1'000'000;
constexpr std::size_t envelope_probes = 100'000;
constexpr double envelope_factor = 1.2;
constexpr std::size_t acceptance_window = 1'000'000;
constexpr double min_acceptance = 1e-4;
constexpr std::uint64_t default_mc_seed = 0x6e6f726d616c697aULL;

struct GridResult
{
  double integral = 0.0;
  double coarse = 0.0;
  double max = 0.0;
};

// Indices of the half-resolution subgrid: every other node plus the last.
std::vector<std::size_t>
coarse_indices(std::size_t count)
{
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < count; i += 2)
    idx.push_back(i);
  if (idx.back() != count - 1)
    idx.push_back(count - 1);
  return idx;
}

// Trapezoid integral of expr over a tensor grid in up to three dimensions,
// together with the same rule on the half-resolution subgrid.
GridResult
integrate_grid(const FunctionExpr& expr,
               const std::vector<Interval>& domain,
               std::size_t per_axis)
{
  const std::size_t d = domain.size();
  std::vector<std::vector<double>> nodes(d), weights(d), coarse_w(d);
  std::vector<std::vector<char>> in_coarse(d);
  const auto cidx = coarse_indices(per_axis);
  for (std::size_t a = 0; a < d; ++a) {
    nodes[a] = graded_nodes(domain[a], per_axis);
    weights[a] = trapezoid_weights(nodes[a]);
    std::vector<double> cn;
    for (std::size_t i : cidx)
      cn.push_back(nodes[a][i]);
    const auto cw = trapezoid_weights(cn);
    coarse_w[a].assign(per_axis, 0.0);
    in_coarse[a].assign(per_axis, 0);
    for (std::size_t j = 0; j < cidx.size(); ++j) {
      coarse_w[a][cidx[j]] = cw[j];
      in_coarse[a][cidx[j]] = 1;
    }
  }

  GridResult res;
  std::size_t total = 1;
  for (std::size_t a = 0; a < d; ++a)
    total *= per_axis;
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double w = 1.0, cw = 1.0;
    bool coarse = true;
    for (std::size_t a = d; a-- > 0;) {
      idx[a] = rem % per_axis;
      rem /= per_axis;
      x[a] = nodes[a][idx[a]];
      w *= weights[a][idx[a]];
      cw *= coarse_w[a][idx[a]];
      coarse = coarse && in_coarse[a][idx[a]];
    }
    const double f = expr(x);
    res.integral += w * f;
    if (coarse)
      res.coarse += cw * f;
    res.max = std::max(res.max, f);
  }
  return res;
}

void
check_z(double z)
{
  if (!std::isfinite(z) || z <= 1e-300)
    throw DegeneratePdf("normalization constant " + std::to_string(z) +
                        " is not usable");
}

double
probe_max(const SyntheticPdf& pdf, Rng& rng, std::size_t probes)
{
  std::vector<double> x(pdf.dim());
  double best = 0.0;
  for (std::size_t i = 0; i < probes; ++i) {
    for (std::size_t a = 0; a < x.size(); ++a)
      x[a] = uniform(rng, pdf.domain[a].lo, pdf.domain[a].hi);
    best = std::max(best, pdf.expr(x));
  }
  return best;
}

} // namespace

double
SyntheticPdf::density(std::span<const double> x) const
{
  for (std::size_t a = 0; a < domain.size(); ++a)
    if (x[a] < domain[a].lo || x[a] > domain[a].hi)
      return 0.0;
  return expr(x) / z;
}

nlohmann::json
SyntheticPdf::to_json() const
{
  nlohmann::json dom = nlohmann::json::array();
  for (const auto& iv : domain)
    dom.push_back({ iv.lo, iv.hi });
  return { { "expr", expr.to_json() },
           { "domain", dom },
           { "z", z },
           { "z_method",
             z_method == ZMethod::grid_quadrature ? "grid_quadrature"
                                                  : "monte_carlo" },
           { "z_rel_error", z_rel_error },
           { "expr_max", expr_max } };
}

SyntheticPdf
SyntheticPdf::from_json(const nlohmann::json& j)
{
  try {
    SyntheticPdf p;
    p.expr = FunctionExpr::from_json(j.at("expr"));
    for (const auto& iv : j.at("domain"))
      p.domain.push_back({ iv.at(0).get<double>(), iv.at(1).get<double>() });
    p.z = j.at("z").get<double>();
    const auto m = j.at("z_method").get<std::string>();
    if (m != "grid_quadrature" && m != "monte_carlo")
      throw FormatError("unknown z_method '" + m + "'");
    p.z_method =
      m == "grid_quadrature" ? ZMethod::grid_quadrature : ZMethod::monte_carlo;
    p.z_rel_error = j.at("z_rel_error").get<double>();
    p.expr_max = j.value("expr_max", 0.0);
    if (p.domain.size() != p.expr.dim())
      throw FormatError("domain dimension does not match expression");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed pdf: ") + e.what());
  }
}

std::size_t
quadrature_points(std::size_t dim)
{
  switch (dim) {
    case 1:
      return 4096;
    case 2:
      return 512;
    case 3:
      return 128;
    default:
      return 0;
  }
}

std::vector<double>
graded_nodes(const Interval& iv, std::size_t count)
{
  std::vector<double> x(count);
  const double denom = static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = static_cast<double>(i) / denom;
    x[i] = iv.lo + iv.width() * (u * u * u);
  }
  x.back() = iv.hi;
  return x;
}

std::vector<double>
trapezoid_weights(std::span<const double> nodes)
{
  const std::size_t n = nodes.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = nodes[i + 1] - nodes[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

SyntheticPdf
normalize(const FunctionExpr& expr, std::vector<Interval> domain, Rng& rng)
{
  const std::size_t d = domain.size();
  if (d == 0 || expr.dim() != d)
    throw ShapeMismatch("domain dimension does not match expression");
  for (const auto& iv : domain)
    if (!(iv.hi > iv.lo))
      throw InvalidConfig("empty domain interval");

  SyntheticPdf pdf;
  pdf.expr = expr;
  pdf.domain = std::move(domain);
  pdf.z_method = ZMethod::grid_quadrature;

  if (d > 1) {
    if (auto factors = expr.axis_factors(); !factors.empty()) {
      double z = 1.0, rel = 0.0, mx = 1.0;
      std::vector<bool> covered(d, false);
      for (const auto& [axis, factor] : factors) {
        covered[axis] = true;
        const auto g = integrate_grid(
          factor.as_1d(), { pdf.domain[axis] }, quadrature_points(1));
        z *= g.integral;
        mx *= g.max;
        if (g.integral > 0.0)
          rel += std::abs(g.integral - g.coarse) / (3.0 * g.integral);
      }
      for (std::size_t a = 0; a < d; ++a)
        if (!covered[a])
          z *= pdf.domain[a].width();
      check_z(z);
      pdf.z = z;
      pdf.z_rel_error = rel;
      pdf.expr_max = mx;
      return pdf;
    }
  }

  if (d <= 3) {
    const auto g = integrate_grid(expr, pdf.domain, quadrature_points(d));
    check_z(g.integral);
    pdf.z = g.integral;
    pdf.z_rel_error = std::abs(g.integral - g.coarse) / (3.0 * g.integral);
    pdf.expr_max = g.max;
    return pdf;
  }

  double vol = 1.0;
  for (const auto& iv : pdf.domain)
    vol *= iv.width();
  std::vector<double> x(d);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < mc_probes; ++i) {
    for (std::size_t a = 0; a < d; ++a)
      x[a] = uniform(rng, pdf.domain[a].lo, pdf.domain[a].hi);
    const double f = expr(x);
    sum += f;
    sum_sq += f * f;
  }
  const double n = static_cast<double>(mc_probes);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  const double z = vol * mean;
  check_z(z);
  pdf.z = z;
  pdf.z_method = ZMethod::monte_carlo;
  pdf.z_rel_error = std::sqrt(var / n) / mean;
  pdf.expr_max = 0.0;
  return pdf;
}

SyntheticPdf
normalize(const FunctionExpr& expr, std::vector<Interval> domain)
{
  Rng rng = make_rng(default_mc_seed);
  return normalize(expr, std::move(domain), rng);
}

SampleSet
rejection_sample(const SyntheticPdf& pdf,
                 std::size_t n,
                 Rng& rng,
                 RejectionStats* stats)
{
  if (n == 0)
    throw InvalidConfig("rejection sampling needs n >= 1");
  const std::size_t d = pdf.dim();
  double peak = pdf.expr_max > 0.0 ? pdf.expr_max
                                   : probe_max(pdf, rng, envelope_probes);
  if (!(peak > 0.0) || !std::isfinite(peak))
    throw DegeneratePdf("density has no positive envelope");
  double envelope = envelope_factor * peak;

  std::vector<AxisScale> scale(d);
  double jac = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    scale[a] = { pdf.domain[a].lo, pdf.domain[a].width() };
    jac *= pdf.domain[a].width();
  }

  std::vector<double> pts;
  std::vector<double> truth;
  pts.reserve(n * d);
  truth.reserve(n);
  std::vector<double> x(d);
  RejectionStats st;
  std::size_t window_props = 0, window_acc = 0;

  while (truth.size() < n) {
    for (std::size_t a = 0; a < d; ++a)
      x[a] = uniform(rng, pdf.domain[a].lo, pdf.domain[a].hi);
    const double f = pdf.expr(x);
    ++st.proposals;
    ++window_props;
    if (f > envelope) {
      envelope = envelope_factor * f;
      pts.clear();
      truth.clear();
      ++st.restarts;
      st.accepted = 0;
      window_props = window_acc = 0;
      continue;
    }
    if (uniform01(rng) * envelope < f) {
      for (std::size_t a = 0; a < d; ++a)
        pts.push_back(scale[a].to_unit(x[a]));
      truth.push_back(f / pdf.z * jac);
      ++st.accepted;
      ++window_acc;
    }
    if (window_props == acceptance_window) {
      if (static_cast<double>(window_acc) <
          min_acceptance * static_cast<double>(acceptance_window))
        throw LowAcceptance("accepted " + std::to_string(window_acc) +
                            " of " + std::to_string(acceptance_window) +
                            " proposals");
      window_props = window_acc = 0;
    }
  }
  st.envelope = envelope;
  if (stats)
    *stats = st;

  SampleSet out(d, std::move(pts));
  out.set_scale(std::move(scale));
  out.set_density_truth(std::move(truth));
  return out;
}

} // namespace dde::synthpdf
