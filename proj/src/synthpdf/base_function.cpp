#include "dde/synthpdf/base_function.hpp"

#include "dde/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dde::synthpdf {
namespace {

struct RowInfo
{
  BaseKind kind;
  std::string_view name;
  TagSet tags;
};

// clang-format off
constexpr std::array<RowInfo, base_kind_count> rows{ {
  { BaseKind::sigmoid,            "sigmoid",            { Tag::monotone } },
  { BaseKind::gaussian,           "gaussian",           { Tag::gaussian } },
  { BaseKind::s_minus_x,          "s_minus_x",          { Tag::linear, Tag::monotone } },
  { BaseKind::capped_inverse,     "capped_inverse",     { Tag::inverse, Tag::monotone } },
  { BaseKind::inverse,            "inverse",            { Tag::inverse, Tag::monotone } },
  { BaseKind::min_capped_inverse, "min_capped_inverse", { Tag::inverse, Tag::monotone } },
  { BaseKind::max_floor,          "max_floor",          { Tag::monotone } },
  { BaseKind::scaled_linear,      "scaled_linear",      { Tag::linear, Tag::monotone } },
  { BaseKind::damped_linear,      "damped_linear",      { Tag::linear, Tag::monotone } },
  { BaseKind::s2_minus_x2,        "s2_minus_x2",        { Tag::power, Tag::monotone } },
  { BaseKind::s_minus_x_squared,  "s_minus_x_squared",  { Tag::power, Tag::monotone } },
  { BaseKind::power,              "power",              { Tag::power, Tag::monotone } },
  { BaseKind::s_minus_power,      "s_minus_power",      { Tag::power, Tag::monotone } },
  { BaseKind::step_above,         "step_above",         { Tag::step, Tag::monotone } },
  { BaseKind::step_below,         "step_below",         { Tag::step, Tag::monotone } },
  { BaseKind::step_outer,         "step_outer",         { Tag::step } },
  { BaseKind::step_inner,         "step_inner",         { Tag::step } },
  { BaseKind::identity,           "identity",           { Tag::linear, Tag::monotone } },
  { BaseKind::square,             "square",             { Tag::power, Tag::monotone } },
  { BaseKind::sqrt,               "sqrt",               { Tag::power, Tag::monotone } },
  { BaseKind::sin_plus_one,       "sin_plus_one",       { Tag::sinusoidal } },
  { BaseKind::cos_plus_one,       "cos_plus_one",       { Tag::sinusoidal } },
  { BaseKind::abs_sin,            "abs_sin",            { Tag::sinusoidal } },
  { BaseKind::abs_cos,            "abs_cos",            { Tag::sinusoidal } },
  { BaseKind::abs_sinc,           "abs_sinc",           { Tag::sinusoidal } },
} };
// clang-format on

constexpr std::array<std::string_view, tag_count> tag_names{
  "gaussian", "linear", "monotone", "sinusoidal", "step", "inverse", "power"
};

const RowInfo&
info(BaseKind kind)
{
  return rows[static_cast<std::size_t>(kind)];
}

constexpr std::size_t max_draws = 1000;
constexpr std::size_t max_grid_points = 4096;

} // namespace

std::vector<Tag>
TagSet::to_vector() const
{
  std::vector<Tag> out;
  for (std::size_t i = 0; i < tag_count; ++i)
    if (contains(static_cast<Tag>(i)))
      out.push_back(static_cast<Tag>(i));
  return out;
}

std::string_view
kind_name(BaseKind kind)
{
  return info(kind).name;
}

std::optional<BaseKind>
kind_from_name(std::string_view name)
{
  for (const auto& row : rows)
    if (row.name == name)
      return row.kind;
  return std::nullopt;
}

std::string_view
tag_name(Tag tag)
{
  return tag_names[static_cast<std::size_t>(tag)];
}

std::optional<Tag>
tag_from_name(std::string_view name)
{
  for (std::size_t i = 0; i < tag_count; ++i)
    if (tag_names[i] == name)
      return static_cast<Tag>(i);
  return std::nullopt;
}

TagSet
kind_tags(BaseKind kind)
{
  return info(kind).tags;
}

std::size_t
alpha_variant_count(BaseKind kind)
{
  switch (kind) {
    case BaseKind::min_capped_inverse:
      return 3;
    case BaseKind::max_floor:
    case BaseKind::scaled_linear:
    case BaseKind::power:
    case BaseKind::s_minus_power:
      return 2;
    default:
      return 0;
  }
}

double
alpha_value(BaseKind kind, std::size_t variant)
{
  static constexpr std::array<double, 3> min_capped{ 0.5, 2.0, 4.0 };
  static constexpr std::array<double, 2> floor_alpha{ 0.4, 0.8 };
  static constexpr std::array<double, 2> linear_alpha{ 2.0, 3.0 };
  static constexpr std::array<double, 2> power_alpha{ 1.0, 2.0 };
  if (variant >= alpha_variant_count(kind))
    throw InvalidConfig("alpha variant " + std::to_string(variant) +
                        " out of range for " + std::string(kind_name(kind)));
  switch (kind) {
    case BaseKind::min_capped_inverse:
      return min_capped[variant];
    case BaseKind::max_floor:
      return floor_alpha[variant];
    case BaseKind::scaled_linear:
      return linear_alpha[variant];
    default:
      return power_alpha[variant];
  }
}

MuSigma
gaussian_mu_sigma(const BaseFunctionSpec& spec)
{
  static constexpr std::array<double, 4> mu_factor{ 0.25, 0.5, 0.75, 1.0 };
  static constexpr std::array<double, 3> sigma_factor{ 0.05, 0.1, 0.2 };
  const std::size_t v = spec.mu_sigma_variant % gaussian_variant_count;
  return { mu_factor[v / 3] * spec.r * spec.s, sigma_factor[v % 3] * spec.s };
}

double
eval_base(const BaseFunctionSpec& spec, double x)
{
  constexpr double eps = base_epsilon;
  const double r = spec.r;
  const double s = spec.s;
  auto alpha = [&] { return alpha_value(spec.kind, spec.alpha_variant); };
  switch (spec.kind) {
    case BaseKind::sigmoid:
      return 1.0 / (1.0 + std::exp(-r * x));
    case BaseKind::gaussian: {
      const auto [mu, sigma] = gaussian_mu_sigma(spec);
      const double z = (x - mu) / sigma;
      return 2.0 * r / std::sqrt(2.0 * std::numbers::pi * sigma * sigma) *
             std::exp(-0.5 * z * z);
    }
    case BaseKind::s_minus_x:
      return s - x;
    case BaseKind::capped_inverse:
      return std::min(1.0 / (4.0 * x + eps), 1000.0);
    case BaseKind::inverse:
      return 1.0 / (4.0 * x + eps);
    case BaseKind::min_capped_inverse:
      return std::min(alpha() * r, 1.0 / (50.0 * x + eps));
    case BaseKind::max_floor:
      return std::max(alpha() * r * s, x);
    case BaseKind::scaled_linear:
      return alpha() * r * x;
    case BaseKind::damped_linear:
      return x / (4.0 * std::max(0.2, r));
    case BaseKind::s2_minus_x2:
      return s * s - x * x;
    case BaseKind::s_minus_x_squared:
      return (s - x) * (s - x);
    case BaseKind::power:
      return std::pow(x, alpha() * r);
    case BaseKind::s_minus_power:
      // S - x^p goes negative past x = S^(1/p) when S > 1 and p > 1.
      return std::max(0.0, s - std::pow(x, std::max(alpha() * r, 0.05)));
    case BaseKind::step_above:
      return x > std::max(r, 0.6) * s ? 1.0 : 0.0;
    case BaseKind::step_below:
      return x < std::max(r, 0.4) * s ? 1.0 : 0.0;
    case BaseKind::step_outer:
      return (x < 0.25 * r * s || x > 0.75 * r * s) ? 1.0 : 0.0;
    case BaseKind::step_inner:
      return (std::max(0.25 * r, 0.1) * s < x && x < std::max(0.75 * r, 0.4) * s)
               ? 1.0
               : 0.0;
    case BaseKind::identity:
      return x;
    case BaseKind::square:
      return x * x;
    case BaseKind::sqrt:
      return std::sqrt(x);
    case BaseKind::sin_plus_one:
      return std::sin(x) + 1.0;
    case BaseKind::cos_plus_one:
      return std::cos(x) + 1.0;
    case BaseKind::abs_sin:
      return std::abs(std::sin(x));
    case BaseKind::abs_cos:
      return std::abs(std::cos(x));
    case BaseKind::abs_sinc:
      return std::abs(std::sin(x) / (x + eps));
  }
  return 0.0;
}

double
base_max(const BaseFunctionSpec& spec)
{
  double best = 0.0;
  const double step = spec.s / static_cast<double>(max_grid_points - 1);
  for (std::size_t i = 0; i < max_grid_points; ++i)
    best = std::max(best, eval_base(spec, static_cast<double>(i) * step));
  return best;
}

std::vector<BaseKind>
admitted_kinds(const TagFilter& filter)
{
  std::vector<BaseKind> out;
  for (const auto& row : rows)
    if (filter.admits(row.tags))
      out.push_back(row.kind);
  return out;
}

BaseFunctionSpec
sample_base_function(Rng& rng,
                     double s,
                     const TagFilter& filter,
                     double min_max)
{
  if (!(s > 0.0))
    throw InvalidConfig("domain extent must be positive");
  const auto kinds = admitted_kinds(filter);
  if (kinds.empty())
    throw FilterEmpty("no base function matches the tag filter");

  for (std::size_t draw = 0; draw < max_draws; ++draw) {
    BaseFunctionSpec spec;
    spec.kind = kinds[std::uniform_int_distribution<std::size_t>(
      0, kinds.size() - 1)(rng)];
    spec.r = uniform01(rng);
    spec.s = s;
    if (const std::size_t na = alpha_variant_count(spec.kind); na > 0)
      spec.alpha_variant = static_cast<std::uint8_t>(
        std::uniform_int_distribution<std::size_t>(0, na - 1)(rng));
    if (spec.kind == BaseKind::gaussian)
      spec.mu_sigma_variant = static_cast<std::uint8_t>(
        std::uniform_int_distribution<std::size_t>(
          0, gaussian_variant_count - 1)(rng));
    if (min_max <= 0.0 || base_max(spec) >= min_max)
      return spec;
  }
  throw RetryExhausted("no base function with maximum >= " +
                       std::to_string(min_max) + " in " +
                       std::to_string(max_draws) + " draws");
}

} // namespace dde::synthpdf
