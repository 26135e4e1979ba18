#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polar/cpa_net.hpp"

namespace polar {

inline constexpr double kDefaultLogEps = 1e-12;
// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankCutoff = 1e-10;

// The k largest singular values, descending.
struct SpectrumTopK {
  std::vector<double> values;

  std::size_t k() const { return values.size(); }
};

// Sum of log(sigma_i + eps) over a spectrum.
struct LogVolume {
  double value = 0.0;
};

// Throws ErrorKind::input when k is outside [1, min(D, K)] or A is not finite.
SpectrumTopK top_k_singular_values(const Matrix& a, std::size_t k);

// All min(D, K) singular values, descending.
std::vector<double> singular_values(const Matrix& a);

LogVolume log_volume(const SpectrumTopK& spectrum, double eps = kDefaultLogEps);

// Half the log pseudo-determinant of A^T A: sum of log sigma_i over the
// singular values above the rank cutoff. Returns the rank through `rank`.
double half_log_pseudo_det(const Matrix& a, std::size_t* rank = nullptr);

// Moore-Penrose pseudo-inverse using the same rank cutoff.
Matrix pseudo_inverse(const Matrix& a);

// rows x cols matrix with orthonormal rows, from a seeded Gaussian draw.
Matrix random_semi_orthogonal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

// Top-k singular values of W * A.
SpectrumTopK sketch_spectrum(const Matrix& a, const Matrix& w, std::size_t k);

// Scores a latent point by the log-volume of the Jacobian in some space,
// optionally through a sketch. Shared by pool construction and the online
// sampler so both see the same number for the same z.
class VolumeScorer {
 public:
  VolumeScorer(const CpaNetwork& net, std::size_t k, double eps,
               std::optional<Matrix> sketch = std::nullopt);

  double log_volume(const Vector& z) const;
  SpectrumTopK spectrum(const Vector& z) const;

  const CpaNetwork& network() const { return *net_; }
  std::size_t k() const { return k_; }
  double eps() const { return eps_; }
  const std::optional<Matrix>& sketch() const { return sketch_; }

 private:
  const CpaNetwork* net_;
  std::size_t k_;
  double eps_;
  std::optional<Matrix> sketch_;
};

}  // namespace polar
