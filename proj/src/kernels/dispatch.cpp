#include <cstdlib>
#include <string_view>

#include "geoclade/kernels.hpp"

namespace geoclade::kernels {

#if defined(GEOCLADE_HAVE_AVX2)
const KernelTable& avx2_table_unchecked();
#endif

const KernelTable* avx2_table() {
#if defined(GEOCLADE_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("GEOCLADE_KERNELS");
    const std::string_view want = env ? env : "";
    if (want == "scalar") return &scalar_table();
    const KernelTable* fast = avx2_table();
    return fast ? fast : &scalar_table();
  }();
  return *chosen;
}

}  // namespace geoclade::kernels
