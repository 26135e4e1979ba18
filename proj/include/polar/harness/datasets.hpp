#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "polar/metrics.hpp"

namespace polar::harness {

// Known reference distributions standing in for real datasets.
struct SyntheticDataset {
  enum class Kind { gaussian_mixture, uniform_ring, grid_clusters };

  Kind kind = Kind::gaussian_mixture;
  std::size_t size = 1000;
  std::uint64_t seed = 0;

  // gaussian_mixture: one weight, mean and covariance (dim x dim) per component.
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<std::vector<double>>> covs;

  // uniform_ring (2-D): radius and annulus width around center.
  std::vector<double> center{0.0, 0.0};
  double radius = 1.0;
  double width = 0.1;

  // grid_clusters: per_axis^dim isotropic clusters spaced `spacing` apart.
  std::size_t dim = 2;
  std::size_t per_axis = 3;
  double spacing = 1.0;
  double cluster_std = 0.05;

  std::size_t output_dim() const;
  void validate() const;

  nlohmann::json to_json() const;
  static SyntheticDataset from_json(const nlohmann::json& j);
  bool operator==(const SyntheticDataset&) const = default;
};

SampleSet generate(const SyntheticDataset& spec, std::string label = "reference");

}  // namespace polar::harness
