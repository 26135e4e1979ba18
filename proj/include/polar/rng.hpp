#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace polar {

// Derives a child seed from a master seed, a component name, and grid
// indices. Distinct (name, indices) tuples give independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                          std::initializer_list<std::uint64_t> indices = {});

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t basis = 0xcbf29ce484222325ULL);

// Seedable generator with explicit splitting. Uniform and normal variates are
// produced from raw 64-bit words here rather than through the standard
// distributions, so sequences do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Marsaglia's polar method.
  double normal();

  Rng split(std::string_view component, std::uint64_t index = 0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace polar
