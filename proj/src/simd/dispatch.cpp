#include <cstdlib>
#include <string_view>

#include "atsalign/simd/kernels.hpp"

namespace atsalign::simd {

#if !defined(ATSALIGN_HAVE_AVX2)
const Kernels* avx2_kernels() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(ATSALIGN_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels& resolve() {
  const char* env = std::getenv("ATSALIGN_SIMD");
  if (env && std::string_view(env) == "scalar") return scalar_kernels();
  if (const Kernels* k = avx2_kernels(); k && cpu_has_avx2()) return *k;
  return scalar_kernels();
}

}  // namespace

const Kernels& active() {
  static const Kernels& k = resolve();
  return k;
}

}  // namespace atsalign::simd
