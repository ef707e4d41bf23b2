#include "churngrid/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace churngrid::kern {

DotFn dot = dot_ref;
AxpyFn axpy = axpy_ref;
SgdUpdateFn sgd_update = sgd_update_ref;

namespace {

const char* backend_name = "scalar";

void hook_scalar() {
  dot = dot_ref;
  axpy = axpy_ref;
  sgd_update = sgd_update_ref;
  backend_name = "scalar";
}

#if defined(CHURNGRID_HAVE_AVX2_BACKEND)
void hook_avx2() {
  dot = dot_avx2;
  axpy = axpy_avx2;
  sgd_update = sgd_update_avx2;
  backend_name = "avx2";
}
#endif

// Applies the CHURNGRID_SIMD override once before main(); an unknown value
// must not abort static initialization, so it warns and falls back to auto.
struct EnvInit {
  EnvInit() {
    const char* env = std::getenv("CHURNGRID_SIMD");
    try {
      select_backend(env ? env : "auto");
    } catch (const std::exception& e) {
      std::fprintf(stderr, "churngrid: CHURNGRID_SIMD: %s; using auto\n", e.what());
      select_backend("auto");
    }
  }
};
const EnvInit env_init;

}  // namespace

bool avx2_supported() {
#if defined(CHURNGRID_HAVE_AVX2_BACKEND)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

void select_backend(const std::string& name) {
  if (name == "auto") {
#if defined(CHURNGRID_HAVE_AVX2_BACKEND)
    if (avx2_supported()) {
      hook_avx2();
      return;
    }
#endif
    hook_scalar();
    return;
  }
  if (name == "scalar") {
    hook_scalar();
    return;
  }
  if (name == "avx2") {
#if defined(CHURNGRID_HAVE_AVX2_BACKEND)
    if (avx2_supported()) {
      hook_avx2();
      return;
    }
#endif
    throw std::runtime_error("kernels: avx2 backend not supported on this CPU");
  }
  throw std::invalid_argument("kernels: unknown backend '" + name + "'");
}

const char* active_backend() { return backend_name; }

}  // namespace churngrid::kern
