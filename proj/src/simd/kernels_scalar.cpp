#include <cstddef>

#include "polar/simd/kernels.hpp"

namespace polar::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_l2_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void squared_l2_rows_scalar(const double* query, const double* rows, std::size_t count,
                            std::size_t dim, double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = squared_l2_scalar(query, rows + r * dim, dim);
}

double max_value_scalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, &dot_scalar, &squared_l2_scalar,
                                 &squared_l2_rows_scalar, &max_value_scalar};
  return table;
}

}  // namespace polar::simd
