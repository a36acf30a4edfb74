#pragma once

#include "dde/rng.hpp"
#include "dde/sample_set.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

namespace dde::analytic {

enum class Kind
{
  gamma,         // exp(-x) / sqrt(pi x), x > 0
  two_gaussians, // 0.7 N(5, 3) + 0.3 N(0, 1/2)
  five_fingers,  // w sum_k N((2k-1)/10, 1/100) / 5 + (1 - w) on [0, 1], w = 1/2
  cauchy,        // b / (pi (x^2 + b^2))
  discontinuous, // 4/5, 1, 5/4 pieces on [0, 1]
  local_shape,   // nine shapes with a known point t where p(t) = 1
};

inline constexpr std::size_t local_shape_count = 9;

/// Closed-form 1D test density with exact CDF and exact sampling.
class AnalyticPdf
{
public:
  static AnalyticPdf gamma() { return AnalyticPdf(Kind::gamma); }
  static AnalyticPdf two_gaussians() { return AnalyticPdf(Kind::two_gaussians); }
  static AnalyticPdf five_fingers() { return AnalyticPdf(Kind::five_fingers); }
  static AnalyticPdf cauchy(double b = 1.0);
  static AnalyticPdf discontinuous() { return AnalyticPdf(Kind::discontinuous); }
  /// index in 1..9, in table order.
  static AnalyticPdf local_shape(std::size_t index);

  /// Parses `gamma`, `two-gaussians`, `five-fingers`, `cauchy`,
  /// `cauchy:b=<float>`, `discontinuous`, `local-shape:<1..9>`.
  static AnalyticPdf parse(std::string_view name);

  Kind kind() const { return kind_; }
  double cauchy_scale() const { return b_; }
  std::size_t shape_index() const { return shape_; }
  std::string name() const;

  /// Exact density; 0 outside the support. gamma(0) is +infinity.
  double density(double x) const;
  double cdf(double x) const;
  /// Inverse CDF for u in (0, 1). Closed form where one exists, otherwise
  /// bisection to 1e-10.
  double quantile(double u) const;

  /// Closed support bounds; infinite where the density has unbounded support.
  std::pair<double, double> support() const;

  /// n exact draws (original coordinates) with density_truth filled in.
  /// The gamma sampler never returns 0.
  SampleSet sample(std::size_t n, Rng& rng) const;

private:
  explicit AnalyticPdf(Kind k) : kind_(k) {}

  Kind kind_;
  double b_ = 1.0;
  std::size_t shape_ = 0;
};

/// Local-shape PDF and its query point t with density(t) = 1.
std::pair<AnalyticPdf, double>
local_shape_query(std::size_t index);

/// Display label of a local-shape row, e.g. "2x if x < 1".
std::string_view
local_shape_label(std::size_t index);

} // namespace dde::analytic
