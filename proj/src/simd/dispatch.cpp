#include <atomic>
#include <cstdlib>
#include <string>

#include "polar/error.hpp"
#include "polar/simd/kernels.hpp"

namespace polar::simd {

#if !defined(POLAR_BUILD_AVX2)
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#if !defined(POLAR_BUILD_NEON)
const KernelTable* neon_kernels() { return nullptr; }
#endif

namespace {

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar: return &scalar_kernels();
    case Isa::avx2: return avx2_kernels();
    case Isa::neon: return neon_kernels();
  }
  return nullptr;
}

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* select() {
  if (const char* env = std::getenv("POLAR_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon})
      if (want == to_string(isa) && supported(isa)) return table_for(isa);
  }
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (supported(isa)) return table_for(isa);
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{select()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) { return table_for(isa) != nullptr && cpu_has(isa); }

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void force(Isa isa) {
  if (!supported(isa))
    fail(ErrorKind::unsupported, "SIMD variant '" + std::string(to_string(isa)) +
                                     "' is not available on this build or CPU");
  current().store(table_for(isa), std::memory_order_release);
}

}  // namespace polar::simd
