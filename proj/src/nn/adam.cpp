#include "dde/nn/adam.hpp"

#include "dde/error.hpp"
#include "dde/simd/kernels.hpp"

#include <cmath>
#include <string>

namespace dde::nn {

void
adam_step(std::vector<double>& params,
          const std::vector<double>& grads,
          AdamState& state,
          double lr,
          const AdamConfig& cfg)
{
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n)
    throw LengthMismatch("adam: " + std::to_string(n) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, state of " +
                         std::to_string(state.m.size()));
  ++state.step;
  const double t = static_cast<double>(state.step);
  const simd::AdamCoeffs c{ lr,
                            cfg.beta1,
                            cfg.beta2,
                            cfg.eps,
                            1.0 - std::pow(cfg.beta1, t),
                            1.0 - std::pow(cfg.beta2, t) };
  simd::active_kernels().adam_update(
    params.data(), grads.data(), state.m.data(), state.v.data(), n, c);
}

} // namespace dde::nn
