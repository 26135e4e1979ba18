#include <arm_neon.h>

#include <cstddef>

#include "polar/simd/kernels.hpp"

namespace polar::simd {

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_l2_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc0 = vfmaq_f64(acc0, d0, d0);
    acc1 = vfmaq_f64(acc1, d1, d1);
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void squared_l2_rows_neon(const double* query, const double* rows, std::size_t count,
                          std::size_t dim, double* out) {
  std::size_t r = 0;
  if (dim == 1) {
    const float64x2_t q = vdupq_n_f64(query[0]);
    for (; r + 2 <= count; r += 2) {
      const float64x2_t d = vsubq_f64(vld1q_f64(rows + r), q);
      vst1q_f64(out + r, vmulq_f64(d, d));
    }
  }
  for (; r < count; ++r) out[r] = squared_l2_neon(query, rows + r * dim, dim);
}

double max_value_neon(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 2) {
    float64x2_t acc = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vld1q_f64(x + i));
    m = vmaxvq_f64(acc);
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

}  // namespace

const KernelTable* neon_kernels() {
  static const KernelTable table{Isa::neon, &dot_neon, &squared_l2_neon, &squared_l2_rows_neon,
                                 &max_value_neon};
  return &table;
}

}  // namespace polar::simd
