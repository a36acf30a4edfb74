#include "dde/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace dde::simd {

#ifdef DDE_HAVE_AVX2
const KernelTable&
avx2_kernel_table();
#endif

const KernelTable*
avx2_kernels()
{
#if defined(DDE_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  static const bool supported =
    __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable&
active_kernels()
{
  static const KernelTable& table = [] () -> const KernelTable& {
    const char* env = std::getenv("DDE_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar")
      return scalar_kernels();
    if (const KernelTable* t = avx2_kernels())
      return *t;
    return scalar_kernels();
  }();
  return table;
}

} // namespace dde::simd
