#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "polar/cpa_net.hpp"
#include "polar/domain.hpp"
#include "polar/spectral.hpp"

namespace polar {

struct AtlasRegion {
  ActivationCode code;
  Vector representative;
  AffineMap map;
  Matrix slope_pinv;
  std::vector<double> spectrum;  // all singular values, descending
  double log_volume = 0.0;       // sum log(sigma + eps) over the full spectrum
  double half_log_pdet = 0.0;    // sum log sigma over nonzero singular values
  std::size_t rank = 0;
  double prior_mass = 0.0;

  std::uint64_t code_hash() const { return code.hash(); }
};

// Every linear region a probe grid found over a box domain.
struct RegionAtlas {
  CpaNetwork net;
  LatentDomain domain;
  std::vector<AtlasRegion> regions;
  std::size_t resolution = 0;  // finest grid cells per dimension
  bool complete = false;       // doubling the finest grid found no new codes
};

struct AtlasOptions {
  std::size_t resolution = 32;
  // Refinement stops once the grid would exceed this many cells.
  std::size_t max_cells = std::size_t{1} << 21;
  std::size_t jitter_per_cell = 8;
  std::uint64_t seed = 0;
};

// Grid probe with jittered refinement along code changes. Requires K <= 3
// and a box domain.
RegionAtlas enumerate_regions(const CpaNetwork& net, const LatentDomain& domain,
                              const AtlasOptions& options = {});

// Normalized output density of the rho-reweighted prior at x. Sums the
// contribution of every region that has a pre-image of x in the domain.
double analytic_density(const RegionAtlas& atlas, const Vector& x, double rho);

// Log of the normalizer sum_w mass_w * vol(D) * det(A_w^T A_w)^(rho/2).
double log_density_normalizer(const RegionAtlas& atlas, double rho);

// Regions ranked toward the mode (rho < 0) or anti-mode (rho > 0); stable.
std::vector<std::size_t> mode_regions(const RegionAtlas& atlas, double rho);

// Index of the atlas region containing z, or -1.
std::ptrdiff_t find_region(const RegionAtlas& atlas, const Vector& z);

// Axis-aligned regular grid of bins over [lo, hi).
struct HistogramSpec {
  Vector lo;
  Vector hi;
  std::vector<std::size_t> bins;

  static HistogramSpec uniform(double lo, double hi, std::size_t bins);
  std::size_t dim() const { return bins.size(); }
  std::size_t total_bins() const;
  double bin_volume() const;
  // Flattened bin (dimension 0 slowest) or -1 outside; hi edges close the last bin.
  std::ptrdiff_t bin_of(const Vector& x) const;
  // Lower corner and width of a flattened bin.
  Vector bin_lo(std::size_t flat) const;
  Vector bin_width() const;
};

struct Histogram {
  HistogramSpec spec;
  std::vector<double> mass;
  double overflow = 0.0;  // mass that fell outside every bin
};

Histogram mc_density(const CpaNetwork& net, const std::vector<Vector>& draws,
                     const HistogramSpec& spec);

// Bin masses of analytic_density by midpoint quadrature with `subdivisions`
// cells per bin per dimension. Requires output dim == latent dim.
Histogram analytic_histogram(const RegionAtlas& atlas, double rho, const HistogramSpec& spec,
                             std::size_t subdivisions = 16);

double total_variation(const Histogram& a, const Histogram& b);

std::string histogram_csv(const Histogram& h);
std::string serialize_atlas(const RegionAtlas& atlas);

}  // namespace polar
