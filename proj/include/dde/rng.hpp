#pragma once

#include <cstdint>
#include <random>

namespace dde {

using Rng = std::mt19937_64;

namespace detail {
constexpr std::uint64_t
splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
} // namespace detail

/// Seed for an independent child stream. Depends only on its arguments, so
/// work keyed by (master, index) is reproducible regardless of scheduling.
constexpr std::uint64_t
child_seed(std::uint64_t master,
           std::uint64_t index,
           std::uint64_t attempt = 0) noexcept
{
  std::uint64_t s = detail::splitmix64(master);
  s = detail::splitmix64(s ^ detail::splitmix64(index + 0x51ed27ULL));
  return detail::splitmix64(s ^ (attempt * 0x2545f4914f6cdd1dULL));
}

inline Rng
make_rng(std::uint64_t seed)
{
  return Rng(seed);
}

inline double
uniform01(Rng& rng)
{
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double
uniform(Rng& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double
standard_normal(Rng& rng)
{
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

} // namespace dde
