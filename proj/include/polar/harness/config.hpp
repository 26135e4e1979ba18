#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polar/domain.hpp"
#include "polar/harness/datasets.hpp"
#include "polar/metrics.hpp"
#include "polar/polarity.hpp"

namespace polar::harness {

struct MetricOptions {
  std::size_t k_nn = 3;
  std::size_t j = 3;
  double epsilon = 1e-4;
  std::size_t n_pairs = 1000;
  EndpointSpace endpoint_space = EndpointSpace::latent;
  std::size_t split_layer = 1;
  std::size_t nn_bins = 20;

  bool operator==(const MetricOptions&) const = default;
};

struct ExperimentConfig {
  std::filesystem::path model;
  std::optional<std::filesystem::path> feature_model;
  std::optional<std::filesystem::path> pool;
  // Absent means uniform [-1, 1]^K once the model is known.
  std::optional<LatentDomain> domain;

  std::size_t n = kDefaultPoolSize;
  std::size_t k = kDefaultTopK;
  double eps = kDefaultLogEps;
  Eigen::Index sketch_rows = 0;
  std::uint64_t seed = 0;

  std::vector<double> rho_grid{0.0};
  std::vector<double> psi_grid{1.0};
  std::size_t samples = 10000;
  MetricOptions metrics;

  std::optional<SyntheticDataset> reference;
  // run_shift compares against a biased and a uniform reference.
  std::optional<SyntheticDataset> reference_biased;
  std::optional<SyntheticDataset> reference_uniform;

  std::vector<std::size_t> n_grid;
  std::vector<std::size_t> k_grid;

  double rho_extreme = -20.0;
  std::size_t modes_top = 16;

  std::filesystem::path out_dir = ".";

  // Throws ErrorKind::config.
  void validate() const;

  nlohmann::json to_json() const;
  // Relative paths resolve against base_dir.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string serialize() const;

  bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace polar::harness
