#include "churngrid/kernels.hpp"

// Reference kernels. Plain sequential loops: `dot` accumulates strictly left
// to right, which is the semantic the AVX2 variant is tested against (within
// rounding); axpy/sgd_update are elementwise and must match it bitwise.

namespace churngrid::kern {

double dot_ref(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_ref(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void sgd_update_ref(double* params, double* velocity, const double* grads, size_t n, double lr,
                    double momentum, double weight_decay) {
  for (size_t i = 0; i < n; ++i) {
    velocity[i] = momentum * velocity[i] - lr * (grads[i] + weight_decay * params[i]);
    params[i] += velocity[i];
  }
}

}  // namespace churngrid::kern
