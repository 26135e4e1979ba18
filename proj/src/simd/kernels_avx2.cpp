// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cstddef>

#include "polar/simd/kernels.hpp"

namespace polar::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_l2_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d, d, acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Low-dimensional rows (dim < 4) are the common case for desk-scale sample
// sets, so those are vectorized across rows instead of within a row.
void squared_l2_rows_avx2(const double* query, const double* rows, std::size_t count,
                          std::size_t dim, double* out) {
  if (dim >= 4) {
    for (std::size_t r = 0; r < count; ++r) out[r] = squared_l2_avx2(query, rows + r * dim, dim);
    return;
  }
  std::size_t r = 0;
  if (dim == 1) {
    const __m256d q = _mm256_set1_pd(query[0]);
    for (; r + 4 <= count; r += 4) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(rows + r), q);
      _mm256_storeu_pd(out + r, _mm256_mul_pd(d, d));
    }
  } else {
    const __m256i stride = _mm256_set_epi64x(3 * static_cast<long long>(dim),
                                             2 * static_cast<long long>(dim),
                                             static_cast<long long>(dim), 0);
    for (; r + 4 <= count; r += 4) {
      const double* base = rows + r * dim;
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t c = 0; c < dim; ++c) {
        const __m256d x = _mm256_i64gather_pd(base + c, stride, 8);
        const __m256d d = _mm256_sub_pd(x, _mm256_set1_pd(query[c]));
        acc = _mm256_fmadd_pd(d, d, acc);
      }
      _mm256_storeu_pd(out + r, acc);
    }
  }
  for (; r < count; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double d = query[c] - rows[r * dim + c];
      s += d * d;
    }
    out[r] = s;
  }
}

double max_value_avx2(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    m = lanes[0];
    for (int l = 1; l < 4; ++l)
      if (lanes[l] > m) m = lanes[l];
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::avx2, &dot_avx2, &squared_l2_avx2, &squared_l2_rows_avx2,
                                 &max_value_avx2};
  return &table;
}

}  // namespace polar::simd
