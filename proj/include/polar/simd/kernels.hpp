#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops used by the metrics and the pool builder. Each
// kernel has a scalar reference implementation and optional vector variants;
// one variant is picked at first use from the running CPU's features.
namespace polar::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_l2)(const double* a, const double* b, std::size_t n);
  // out[i] = |query - rows[i]|^2 for row-major rows of width dim.
  void (*squared_l2_rows)(const double* query, const double* rows,
                          std::size_t count, std::size_t dim, double* out);
  // Largest element of a nonempty array.
  double (*max_value)(const double* x, std::size_t n);
};

// Variant tables; the vector ones return nullptr when not compiled in.
const KernelTable& scalar_kernels();
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// True when the variant is compiled in and the CPU can run it.
bool supported(Isa isa);

// The table in use. Selection honors POLAR_SIMD=scalar|avx2|neon when that
// variant is supported, otherwise the widest supported one.
const KernelTable& active();

// Overrides the active table; throws polar::Error if unsupported.
void force(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_l2(std::span<const double> a, std::span<const double> b) {
  return active().squared_l2(a.data(), b.data(), a.size());
}

inline void squared_l2_rows(std::span<const double> query, std::span<const double> rows,
                            std::size_t dim, std::span<double> out) {
  active().squared_l2_rows(query.data(), rows.data(), out.size(), dim, out.data());
}

inline double max_value(std::span<const double> x) {
  return active().max_value(x.data(), x.size());
}

}  // namespace polar::simd
