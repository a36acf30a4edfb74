#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dde::nn {

struct AdamConfig
{
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState
{
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam step with step size lr: update m, then v, then
/// bias-correct, then apply. Throws LengthMismatch on size disagreement.
void
adam_step(std::vector<double>& params,
          const std::vector<double>& grads,
          AdamState& state,
          double lr,
          const AdamConfig& cfg = {});

} // namespace dde::nn
