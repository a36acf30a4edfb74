#include "dde/sample_set.hpp"

#include "dde/error.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace dde {

SampleSet::SampleSet(std::size_t dim)
  : dim_(dim), scale_(dim)
{
  if (dim == 0)
    throw InvalidConfig("sample dimension must be positive");
}

SampleSet::SampleSet(std::size_t dim, std::vector<double> points)
  : SampleSet(dim)
{
  if (points.size() % dim != 0)
    throw ShapeMismatch("coordinate count " + std::to_string(points.size()) +
                        " is not a multiple of dimension " +
                        std::to_string(dim));
  points_ = std::move(points);
}

void
SampleSet::push_back(std::span<const double> p)
{
  if (p.size() != dim_)
    throw ShapeMismatch("point has " + std::to_string(p.size()) +
                        " coordinates, expected " + std::to_string(dim_));
  points_.insert(points_.end(), p.begin(), p.end());
}

void
SampleSet::set_scale(std::vector<AxisScale> s)
{
  if (s.size() != dim_)
    throw ShapeMismatch("scale has " + std::to_string(s.size()) +
                        " axes, expected " + std::to_string(dim_));
  scale_ = std::move(s);
}

double
SampleSet::jacobian() const
{
  double j = 1.0;
  for (const auto& s : scale_)
    j *= s.width;
  return j;
}

void
SampleSet::set_density_truth(std::vector<double> p)
{
  if (p.size() != size())
    throw LengthMismatch("density_truth has " + std::to_string(p.size()) +
                         " entries for " + std::to_string(size()) + " points");
  density_truth_ = std::move(p);
}

std::vector<AxisScale>
SampleSet::bounding_scale() const
{
  std::vector<AxisScale> out(dim_);
  for (std::size_t a = 0; a < dim_; ++a) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < size(); ++i) {
      lo = std::min(lo, points_[i * dim_ + a]);
      hi = std::max(hi, points_[i * dim_ + a]);
    }
    if (!(hi > lo))
      throw DegenerateSample("axis " + std::to_string(a) +
                             " has zero extent");
    out[a] = { lo, hi - lo };
  }
  return out;
}

SampleSet
SampleSet::mapped_to_unit(const std::vector<AxisScale>& s) const
{
  if (s.size() != dim_)
    throw ShapeMismatch("scale dimension mismatch");
  SampleSet out(dim_);
  out.points_.resize(points_.size());
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t a = 0; a < dim_; ++a)
      out.points_[i * dim_ + a] = s[a].to_unit(points_[i * dim_ + a]);
  out.scale_ = s;
  if (density_truth_) {
    double jac = 1.0;
    for (const auto& ax : s)
      jac *= ax.width;
    std::vector<double> p(*density_truth_);
    for (auto& v : p)
      v *= jac;
    out.density_truth_ = std::move(p);
  }
  return out;
}

std::vector<double>
SampleSet::axis_values(std::size_t axis) const
{
  std::vector<double> v(size());
  for (std::size_t i = 0; i < size(); ++i)
    v[i] = points_[i * dim_ + axis];
  return v;
}

} // namespace dde
