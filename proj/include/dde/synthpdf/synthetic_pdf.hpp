#pragma once

#include "dde/rng.hpp"
#include "dde/sample_set.hpp"
#include "dde/synthpdf/expr.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace dde::synthpdf {

struct Interval
{
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class ZMethod : std::uint8_t
{
  grid_quadrature,
  monte_carlo
};

/// Normalized synthetic density: expr / z on the domain box, 0 outside.
struct SyntheticPdf
{
  FunctionExpr expr;
  std::vector<Interval> domain;
  double z = 1.0;
  ZMethod z_method = ZMethod::grid_quadrature;
  double z_rel_error = 0.0;
  /// Maximum of expr seen on the normalization nodes; 0 when z came from
  /// Monte Carlo and no envelope estimate is available.
  double expr_max = 0.0;

  std::size_t dim() const { return domain.size(); }
  double density(std::span<const double> x) const;
  double density(double x) const { return density(std::span(&x, 1)); }

  nlohmann::json to_json() const;
  static SyntheticPdf from_json(const nlohmann::json& j);

  friend bool operator==(const SyntheticPdf&, const SyntheticPdf&) = default;
};

/// Nodes per axis of the normalization grid for d = 1, 2, 3.
std::size_t
quadrature_points(std::size_t dim);

/// Quadrature nodes on [lo, hi], graded towards lo as lo + w u^3 for a
/// uniform u grid. The generator's semi-diverging rows all peak at the lower
/// domain edge, which a uniform grid cannot resolve at eps = 1e-6.
std::vector<double>
graded_nodes(const Interval& iv, std::size_t count);

/// Trapezoid weights for arbitrary ascending nodes.
std::vector<double>
trapezoid_weights(std::span<const double> nodes);

/// Computes z. Trapezoid quadrature on the graded grid for d <= 3 (4096,
/// 512^2 or 128^3 nodes), a product of 1D integrals when the expression
/// factorizes per axis under multiplication, and 10^6 uniform Monte Carlo
/// probes otherwise. z_rel_error is a Richardson estimate (half-resolution
/// grid) or the Monte Carlo standard error.
///
/// Throws DegeneratePdf when z is not finite or z <= 1e-300.
SyntheticPdf
normalize(const FunctionExpr& expr, std::vector<Interval> domain, Rng& rng);

/// Deterministic overload; Monte Carlo probes use a fixed seed.
SyntheticPdf
normalize(const FunctionExpr& expr, std::vector<Interval> domain);

struct RejectionStats
{
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t restarts = 0;
  double envelope = 0.0; // final M in expr units
};

/// Exactly n i.i.d. points from the pdf by uniform-proposal rejection.
///
/// The envelope is 1.2 times the largest expr value on the normalization grid
/// (or over 10^5 uniform probes when none is recorded). A proposal above the
/// envelope raises it and restarts the draw. Points come back in unit-range
/// coordinates with the domain as scale and exact unit-range densities.
///
/// Throws LowAcceptance when fewer than 1 in 10^4 of a window of 10^6
/// proposals is accepted.
SampleSet
rejection_sample(const SyntheticPdf& pdf,
                 std::size_t n,
                 Rng& rng,
                 RejectionStats* stats = nullptr);

} // namespace dde::synthpdf
