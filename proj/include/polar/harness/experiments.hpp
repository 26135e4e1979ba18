#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polar/cpa_net.hpp"
#include "polar/harness/config.hpp"
#include "polar/metrics.hpp"
#include "polar/polarity.hpp"

namespace polar::harness {

// Models and resolved domain for one config.
struct Experiment {
  ExperimentConfig config;
  CpaNetwork net;
  std::optional<CpaNetwork> feature;
  LatentDomain domain;

  const CpaNetwork* feature_ptr() const { return feature ? &*feature : nullptr; }
};

// Loads models from the config's paths (ErrorKind::config on failure).
Experiment load_experiment(const ExperimentConfig& config);
// In-memory variant for callers that already hold the networks.
Experiment make_experiment(ExperimentConfig config, CpaNetwork net,
                           std::optional<CpaNetwork> feature = std::nullopt);

// The config's pool file when given (checked against the models), else a
// freshly built pool for the given psi.
SamplePool experiment_pool(const Experiment& e, std::size_t n, std::size_t k,
                           std::optional<double> psi, std::uint64_t seed);

struct ParetoRow {
  double rho, psi;
  std::uint64_t seed;
  double precision, recall, frechet;
};

struct AblationRow {
  std::size_t n, k;
  double rho, psi;
  std::uint64_t seed;
  double frechet, precision, recall;
  std::size_t distinct_regions;
};

struct ShiftRow {
  double rho, psi;
  std::uint64_t seed;
  double frechet_biased, frechet_uniform;
};

struct PplRow {
  double rho, psi;
  std::uint64_t seed;
  Summary ppl;
};

struct ModeEntry {
  std::size_t rank, pool_index;
  Vector z, x;
  double log_volume, weight, nn_distance;
};

struct ModeReport {
  double rho;
  std::uint64_t seed;
  std::vector<ModeEntry> entries;
  double nn_mean;

  nlohmann::json to_json() const;
};

std::vector<ParetoRow> run_pareto(const Experiment& e);
// Same grid point as run_pareto(rho = 0) but resampling the pool uniformly.
ParetoRow pareto_control(const Experiment& e, std::size_t psi_index);
std::vector<AblationRow> run_ablation(const Experiment& e);
ModeReport run_modes(const Experiment& e, double rho);
std::vector<ShiftRow> run_shift(const Experiment& e);
std::vector<PplRow> run_ppl(const Experiment& e);

std::string to_csv(const std::vector<ParetoRow>& rows);
std::string to_csv(const std::vector<AblationRow>& rows);
std::string to_csv(const std::vector<ShiftRow>& rows);
std::string to_csv(const std::vector<PplRow>& rows);

}  // namespace polar::harness
