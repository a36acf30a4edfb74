#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dde {

/// Affine map of one axis onto [0, 1]: u = (x - offset) / width.
struct AxisScale
{
  double offset = 0.0;
  double width = 1.0;

  double to_unit(double x) const { return (x - offset) / width; }
  double from_unit(double u) const { return offset + u * width; }

  friend bool operator==(const AxisScale&, const AxisScale&) = default;
};

/// n points in d dimensions, stored row-major, with the per-axis map to unit
/// range and optional ground-truth density at each point.
///
/// When `density_truth` is present it is expressed in the same coordinates as
/// `points`. Densities transform with the inverse Jacobian of the axis scales.
class SampleSet
{
public:
  SampleSet() = default;
  explicit SampleSet(std::size_t dim);
  SampleSet(std::size_t dim, std::vector<double> points);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : points_.size() / dim_; }
  bool empty() const { return points_.empty(); }

  std::span<const double> point(std::size_t i) const
  {
    return { points_.data() + i * dim_, dim_ };
  }
  std::span<double> point(std::size_t i)
  {
    return { points_.data() + i * dim_, dim_ };
  }

  const std::vector<double>& coords() const { return points_; }
  std::vector<double>& coords() { return points_; }

  void push_back(std::span<const double> p);
  void reserve(std::size_t n) { points_.reserve(n * dim_); }

  const std::vector<AxisScale>& scale() const { return scale_; }
  void set_scale(std::vector<AxisScale> s);

  /// Product of axis widths: original-coordinate volume of the unit box.
  double jacobian() const;

  const std::optional<std::vector<double>>& density_truth() const
  {
    return density_truth_;
  }
  void set_density_truth(std::vector<double> p);
  void clear_density_truth() { density_truth_.reset(); }

  /// Per-axis [min, max] bounds of the stored points.
  std::vector<AxisScale> bounding_scale() const;

  /// Points mapped through `s` (one AxisScale per axis). Densities, if any,
  /// are multiplied by the Jacobian of the map.
  SampleSet mapped_to_unit(const std::vector<AxisScale>& s) const;

  /// Sample values along one axis.
  std::vector<double> axis_values(std::size_t axis) const;

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

private:
  std::size_t dim_ = 0;
  std::vector<double> points_;
  std::vector<AxisScale> scale_;
  std::optional<std::vector<double>> density_truth_;
};

} // namespace dde
