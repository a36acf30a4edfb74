#pragma once

#include "dde/rng.hpp"

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dde::synthpdf {

/// The parameterized 1D building blocks. R is a unit-interval draw and S the
/// upper bound of the axis domain [0, S].
enum class BaseKind : std::uint8_t
{
  sigmoid,            // 1 / (1 + exp(-R x))
  gaussian,           // 2R / sqrt(2 pi s^2) exp(-(x - mu)^2 / (2 s^2))
  s_minus_x,          // S - x
  capped_inverse,     // min(1 / (4x + eps), 1000)
  inverse,            // 1 / (4x + eps)
  min_capped_inverse, // min(alpha R, 1 / (50x + eps))
  max_floor,          // max(alpha R S, x)
  scaled_linear,      // alpha R x
  damped_linear,      // x / (4 max(0.2, R))
  s2_minus_x2,        // S^2 - x^2
  s_minus_x_squared,  // (S - x)^2
  power,              // x^(alpha R)
  s_minus_power,      // S - x^max(alpha R, 0.05), floored at 0
  step_above,         // 1 if x > max(R, 0.6) S
  step_below,         // 1 if x < max(R, 0.4) S
  step_outer,         // 1 if x < 0.25 R S or x > 0.75 R S
  step_inner,         // 1 if max(0.25R, 0.1) S < x < max(0.75R, 0.4) S
  identity,           // x
  square,             // x^2
  sqrt,               // sqrt(x)
  sin_plus_one,       // sin(x) + 1
  cos_plus_one,       // cos(x) + 1
  abs_sin,            // |sin(x)|
  abs_cos,            // |cos(x)|
  abs_sinc,           // |sin(x) / (x + eps)|
};

inline constexpr std::size_t base_kind_count = 25;

/// Characteristic labels used by the include/exclude generation filters.
enum class Tag : std::uint8_t
{
  gaussian,
  linear,
  monotone,
  sinusoidal,
  step,
  inverse,
  power,
};

inline constexpr std::size_t tag_count = 7;

/// Bit set over Tag.
class TagSet
{
public:
  constexpr TagSet() = default;
  constexpr TagSet(std::initializer_list<Tag> tags)
  {
    for (Tag t : tags)
      bits_ |= bit(t);
  }

  constexpr bool contains(Tag t) const { return (bits_ & bit(t)) != 0; }
  constexpr bool intersects(TagSet o) const { return (bits_ & o.bits_) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr void insert(Tag t) { bits_ |= bit(t); }
  std::vector<Tag> to_vector() const;

  friend constexpr bool operator==(TagSet, TagSet) = default;

private:
  static constexpr std::uint8_t bit(Tag t)
  {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t));
  }
  std::uint8_t bits_ = 0;
};

struct TagFilter
{
  TagSet include; // empty: every row passes
  TagSet exclude;

  bool admits(TagSet tags) const
  {
    if (!include.empty() && !tags.intersects(include))
      return false;
    return !tags.intersects(exclude);
  }
};

inline constexpr double base_epsilon = 1e-6;

struct BaseFunctionSpec
{
  BaseKind kind = BaseKind::identity;
  double r = 0.0;
  double s = 1.0;
  std::uint8_t alpha_variant = 0;
  std::uint8_t mu_sigma_variant = 0;

  friend bool operator==(const BaseFunctionSpec&,
                         const BaseFunctionSpec&) = default;
};

std::string_view
kind_name(BaseKind kind);
std::optional<BaseKind>
kind_from_name(std::string_view name);
std::string_view
tag_name(Tag tag);
std::optional<Tag>
tag_from_name(std::string_view name);

TagSet
kind_tags(BaseKind kind);

/// Number of alpha choices for a row (0 when the row has no alpha).
std::size_t
alpha_variant_count(BaseKind kind);
/// Alpha value of the given variant; throws on rows without alpha.
double
alpha_value(BaseKind kind, std::size_t variant);

/// (mu, sigma) choices for the gaussian row: mu in {0.25, 0.5, 0.75, 1} R S
/// crossed with sigma in {0.05, 0.1, 0.2} S.
inline constexpr std::size_t gaussian_variant_count = 12;
struct MuSigma
{
  double mu;
  double sigma;
};
MuSigma
gaussian_mu_sigma(const BaseFunctionSpec& spec);

/// Value of the base function at x in [0, S].
double
eval_base(const BaseFunctionSpec& spec, double x);

/// Maximum over [0, S] on a uniform 4096-point grid including both ends.
double
base_max(const BaseFunctionSpec& spec);

/// Draws a fresh row among those admitted by the filter, with a fresh R and
/// alpha / (mu, sigma) variant. When `min_max` > 0, redraws until the row's
/// maximum over [0, S] reaches it.
///
/// Throws FilterEmpty when no row is admitted and RetryExhausted after 1000
/// draws that all fall below `min_max`.
BaseFunctionSpec
sample_base_function(Rng& rng,
                     double s,
                     const TagFilter& filter,
                     double min_max = 0.0);

/// Rows admitted by the filter, in enumeration order.
std::vector<BaseKind>
admitted_kinds(const TagFilter& filter);

} // namespace dde::synthpdf
