#pragma once

#include "dde/sample_set.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dde::nn {

inline constexpr double default_smoothing_coefficient = 0.05;

/// Natural cubic smoothing spline through (xs, ys) with the largest
/// roughness penalty whose residual sum of squares stays within
/// s_f = m * Var(ys) * coefficient. Repeated xs are merged into one knot
/// weighted by multiplicity. Evaluation is clamped at 0 and extends
/// linearly beyond the outer knots.
class SmoothingSpline
{
public:
  SmoothingSpline(std::span<const double> xs,
                  std::span<const double> ys,
                  double coefficient = default_smoothing_coefficient);

  double operator()(double x) const;
  std::vector<double> operator()(std::span<const double> xs) const;

  /// Fitted values at the distinct knots, unclamped.
  const std::vector<double>& knot_values() const { return g_; }
  const std::vector<double>& knots() const { return x_; }
  /// Penalty chosen; 0 means interpolation, infinity a straight line.
  double lambda() const { return lambda_; }

private:
  std::vector<double> x_;     // distinct knots, ascending
  std::vector<double> g_;     // fitted values
  std::vector<double> gamma_; // second derivatives (0 at both ends)
  double lambda_ = 0.0;
};

/// SmoothingSpline fitted to (xs, raw) and evaluated at xs, in input order.
std::vector<double>
smooth_1d(std::span<const double> xs,
          std::span<const double> raw,
          double coefficient = default_smoothing_coefficient);

/// smooth_1d on 1D queries; any other dimension returns `raw` unchanged.
std::vector<double>
smooth(const SampleSet& queries,
       std::span<const double> raw,
       double coefficient = default_smoothing_coefficient);

} // namespace dde::nn
