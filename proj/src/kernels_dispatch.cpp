#include <cstdlib>
#include <cstring>

#include "boardcal/kernels.hpp"
#include "boardcal/log.hpp"

namespace boardcal::kernels {

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_available() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

namespace {

bool force_scalar() {
  const char* env = std::getenv("BOARDCAL_FORCE_SCALAR");
  return env != nullptr && std::strcmp(env, "0") != 0;
}

const Backend& select_backend() {
  if (force_scalar()) {
    log::info("kernels: scalar backend forced via BOARDCAL_FORCE_SCALAR");
    return scalar_backend();
  }
#if defined(__x86_64__) || defined(_M_X64)
#ifdef BOARDCAL_HAVE_AVX2
  if (avx2_available()) {
    log::debug("kernels: avx2 backend selected");
    return avx2_backend();
  }
#endif
#endif
  log::debug("kernels: scalar backend selected");
  return scalar_backend();
}

}  // namespace

const Backend& active_backend() {
  static const Backend& backend = select_backend();
  return backend;
}

}  // namespace boardcal::kernels
