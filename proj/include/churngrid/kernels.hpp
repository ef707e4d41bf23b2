#pragma once

#include <cstddef>
#include <string>

// Hot inner-loop primitives behind runtime-dispatched function pointers.
// Three operations cover every hot loop in the network:
//   dot        - reduction; AVX2 accumulates in 4 lanes, so results may differ
//                from the scalar reference by rounding only
//   axpy       - y += a*x elementwise; bitwise identical across backends
//   sgd_update - momentum/weight-decay parameter step; bitwise identical
//
// Convolution forward and backward-input are written as axpy sweeps with a
// fixed accumulation order, so whole-network forward passes are bitwise
// reproducible no matter which backend is active on a given machine.
//
// Backend selection: AVX2 when the CPU supports it, overridable with the
// CHURNGRID_SIMD environment variable (auto | scalar | avx2).

namespace churngrid::kern {

using DotFn = double (*)(const double* a, const double* b, size_t n);
using AxpyFn = void (*)(double a, const double* x, double* y, size_t n);
using SgdUpdateFn = void (*)(double* params, double* velocity, const double* grads, size_t n,
                             double lr, double momentum, double weight_decay);

extern DotFn dot;
extern AxpyFn axpy;
extern SgdUpdateFn sgd_update;

// Scalar reference implementations, always available for equivalence tests.
double dot_ref(const double* a, const double* b, size_t n);
void axpy_ref(double a, const double* x, double* y, size_t n);
void sgd_update_ref(double* params, double* velocity, const double* grads, size_t n, double lr,
                    double momentum, double weight_decay);

#if defined(__x86_64__) || defined(_M_X64)
#define CHURNGRID_HAVE_AVX2_BACKEND 1
double dot_avx2(const double* a, const double* b, size_t n);
void axpy_avx2(double a, const double* x, double* y, size_t n);
void sgd_update_avx2(double* params, double* velocity, const double* grads, size_t n, double lr,
                     double momentum, double weight_decay);
#endif

bool avx2_supported();

// "scalar", "avx2", or "auto" (pick the best supported). Throws
// std::invalid_argument for unknown names and std::runtime_error when the
// requested backend is unsupported on this CPU.
void select_backend(const std::string& name);
const char* active_backend();

}  // namespace churngrid::kern
