#pragma once

// Experiment setups on constructed generators whose outcomes are known.

#include <cmath>

#include "fixtures.hpp"
#include "polar/harness/experiments.hpp"

namespace polar::test {

inline harness::SyntheticDataset mixture_1d(std::vector<double> weights, std::vector<double> means,
                                            std::vector<double> stds, std::size_t size,
                                            std::uint64_t seed) {
  harness::SyntheticDataset d;
  d.kind = harness::SyntheticDataset::Kind::gaussian_mixture;
  d.size = size;
  d.seed = seed;
  d.weights = std::move(weights);
  for (std::size_t i = 0; i < means.size(); ++i) {
    d.means.push_back({means[i]});
    d.covs.push_back({{stds[i] * stds[i]}});
  }
  return d;
}

// Bimodal net: the mode (slope 0.01) images [0, 0.01], which holds the dense
// reference cluster; the anti-mode (slope 10) spreads over [-10, 0) where the
// sparse cluster lives.
inline harness::Experiment pareto_setup(std::uint64_t seed) {
  harness::ExperimentConfig c;
  c.model = "bimodal.json";
  c.n = 20000;
  c.k = 1;
  c.seed = seed;
  c.rho_grid = {-2.0, 0.0, 2.0};
  c.samples = 2000;
  c.reference = mixture_1d({0.4, 0.6}, {0.005, -2.5}, {0.003, 1.0}, 2000, seed + 1000);
  return harness::make_experiment(c, bimodal());
}

// Two-piece net. The biased reference has the moments of the rho = 0 output
// (half the mass on [-2, 0), half on [0, 0.5]); the uniform one matches the
// rho = 1 output, uniform on [-2, 0.5].
inline harness::Experiment shift_setup(std::uint64_t seed) {
  const double s_neg = 2.0 / std::sqrt(12.0), s_pos = 0.5 / std::sqrt(12.0);
  harness::ExperimentConfig c;
  c.model = "two_piece.json";
  c.n = 20000;
  c.k = 1;
  c.seed = seed;
  c.rho_grid = {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  c.samples = 5000;
  c.reference_biased = mixture_1d({0.5, 0.5}, {-1.0, 0.25}, {s_neg, s_pos}, 5000, seed + 2000);
  c.reference_uniform = mixture_1d({0.8, 0.2}, {-1.0, 0.25}, {s_neg, s_pos}, 5000, seed + 3000);
  return harness::make_experiment(c, two_piece());
}

inline harness::Experiment ppl_setup(std::uint64_t seed) {
  harness::ExperimentConfig c;
  c.model = "two_piece.json";
  c.n = 20000;
  c.k = 1;
  c.seed = seed;
  c.rho_grid = {-20.0, 0.0, 20.0};
  c.metrics.n_pairs = 10000;
  return harness::make_experiment(c, two_piece());
}

}  // namespace polar::test
