#include <cstdlib>
#include <string_view>

#include "tsmb/kernels.hpp"

namespace tsmb::kernels {

#if defined(TSMB_HAVE_AVX2)
const KernelSet& avx2_unchecked();
#endif

const KernelSet* avx2() {
#if defined(TSMB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet& active() {
  static const KernelSet& chosen = []() -> const KernelSet& {
    const char* env = std::getenv("TSMB_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar();
    if (const KernelSet* wide = avx2()) return *wide;
    return scalar();
  }();
  return chosen;
}

}  // namespace tsmb::kernels
