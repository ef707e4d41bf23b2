#include "churngrid/kernels.hpp"

#if defined(CHURNGRID_HAVE_AVX2_BACKEND)

#include <immintrin.h>

// AVX2 variants. This translation unit is the only one compiled with -mavx2,
// and deliberately without FMA: every element goes through the same
// multiply-then-add rounding as the scalar reference, which keeps axpy and
// sgd_update bitwise identical to it. dot reassociates the reduction into 4
// lanes and is equivalence-tested within rounding tolerance instead.

namespace churngrid::kern {

double dot_avx2(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double result = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) result += a[i] * b[i];
  return result;
}

void axpy_avx2(double a, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void sgd_update_avx2(double* params, double* velocity, const double* grads, size_t n, double lr,
                     double momentum, double weight_decay) {
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vmom = _mm256_set1_pd(momentum);
  const __m256d vwd = _mm256_set1_pd(weight_decay);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_loadu_pd(params + i);
    const __m256d g = _mm256_loadu_pd(grads + i);
    const __m256d v = _mm256_loadu_pd(velocity + i);
    const __m256d step = _mm256_mul_pd(vlr, _mm256_add_pd(g, _mm256_mul_pd(vwd, p)));
    const __m256d vnew = _mm256_sub_pd(_mm256_mul_pd(vmom, v), step);
    _mm256_storeu_pd(velocity + i, vnew);
    _mm256_storeu_pd(params + i, _mm256_add_pd(p, vnew));
  }
  for (; i < n; ++i) {
    velocity[i] = momentum * velocity[i] - lr * (grads[i] + weight_decay * params[i]);
    params[i] += velocity[i];
  }
}

}  // namespace churngrid::kern

#endif  // CHURNGRID_HAVE_AVX2_BACKEND
