#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polar/cpa_net.hpp"
#include "polar/domain.hpp"
#include "polar/spectral.hpp"

namespace polar {

inline constexpr std::size_t kDefaultPoolSize = 200000;
inline constexpr std::size_t kDefaultTopK = 30;
inline constexpr std::uint64_t kDefaultMaxRejections = 10'000'000;

// One pooled latent and the log-volume of its region's Jacobian.
struct RegionRecord {
  Vector z;
  std::uint64_t code_hash = 0;
  double log_volume = 0.0;
  std::optional<SpectrumTopK> top_sigma;
};

struct PoolOptions {
  std::size_t k = kDefaultTopK;
  double eps = kDefaultLogEps;
  std::uint64_t seed = 0;
  // Measure volumes in the output of feature(G(z)) instead of G(z).
  const CpaNetwork* feature = nullptr;
  // Rows of a semi-orthogonal sketch applied before the SVD; 0 disables it.
  Eigen::Index sketch_rows = 0;
  // Draw pool latents through the truncation baseline (gaussian priors).
  std::optional<double> psi;
  bool keep_spectra = false;
};

struct SamplePool {
  std::vector<RegionRecord> records;
  LatentDomain domain;
  std::size_t k = 0;
  double eps = kDefaultLogEps;
  std::uint64_t seed = 0;
  // "output", or "composed:<feature fingerprint>".
  std::string space = "output";
  std::string net_fingerprint;
  Eigen::Index sketch_rows = 0;
  std::optional<double> psi;

  std::size_t size() const { return records.size(); }
  std::size_t distinct_regions() const;
  std::vector<double> log_volumes() const;
};

// The network whose Jacobian defines volumes for a pool: G, or feature o G.
CpaNetwork space_network(const CpaNetwork& net, const CpaNetwork* feature);
std::string space_label(const CpaNetwork* feature);

// Scorer matching the pool's k, eps and sketch for the given space network.
VolumeScorer pool_scorer(const SamplePool& pool, const CpaNetwork& space_net);

SamplePool build_pool(const CpaNetwork& net, const LatentDomain& domain, std::size_t n,
                      const PoolOptions& options);

// Throws ErrorKind::config when the pool was built for a different model or
// feature model.
void check_pool_matches(const SamplePool& pool, const CpaNetwork& net,
                        const CpaNetwork* feature = nullptr);

// softmax(rho * log_volume), stabilized by the maximum score.
std::vector<double> polarity_weights(const SamplePool& pool, double rho);
std::vector<double> polarity_weights(const std::vector<double>& log_volumes, double rho);

class PolaritySampler {
 public:
  PolaritySampler(const SamplePool& pool, double rho);

  const SamplePool& pool() const { return *pool_; }
  double rho() const { return rho_; }
  const std::vector<double>& weights() const { return weights_; }
  // True when every pool entry has the same weight.
  bool uniform() const { return uniform_; }

  // Pool index for a uniform variate u in [0, 1).
  std::size_t index_for(double u) const;

 private:
  const SamplePool* pool_;
  double rho_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  bool uniform_ = false;
};

// Independent categorical draws with replacement.
std::vector<std::size_t> sample_batch_indices(const PolaritySampler& sampler, std::size_t count,
                                              std::uint64_t seed);
std::vector<Vector> sample_batch(const PolaritySampler& sampler, std::size_t count,
                                 std::uint64_t seed);

// Uniform resampling of the pool; sample_batch with equal weights (rho = 0
// in particular) draws the same indices from the same seed.
std::vector<std::size_t> uniform_pool_indices(const SamplePool& pool, std::size_t count,
                                              std::uint64_t seed);

enum class OnlineVariant { paper_faithful, max_normalized };

OnlineVariant parse_online_variant(std::string_view name);

// Rejection sampler that proposes fresh latents from the pool's domain and
// scores them with a freshly computed Jacobian spectrum.
class OnlineSampler {
 public:
  OnlineSampler(const SamplePool& pool, const CpaNetwork& net, const CpaNetwork* feature,
                double rho, std::uint64_t seed,
                OnlineVariant variant = OnlineVariant::max_normalized,
                std::uint64_t max_rejections = kDefaultMaxRejections);
  OnlineSampler(const OnlineSampler&) = delete;
  OnlineSampler& operator=(const OnlineSampler&) = delete;

  // Throws ErrorKind::timeout after max_rejections consecutive rejections.
  Vector next();

  std::uint64_t proposals() const { return proposals_; }
  std::uint64_t accepted() const { return accepted_; }

 private:
  bool accept(double log_volume);

  const SamplePool* pool_;
  CpaNetwork space_net_;
  VolumeScorer scorer_;
  double rho_;
  OnlineVariant variant_;
  std::uint64_t max_rejections_;
  double max_score_;
  double log_pool_sum_;
  Rng rng_;
  std::uint64_t proposals_ = 0;
  std::uint64_t accepted_ = 0;
};

std::vector<Vector> sample_online(const SamplePool& pool, const CpaNetwork& net,
                                  const CpaNetwork* feature, double rho, std::size_t count,
                                  std::uint64_t seed,
                                  OnlineVariant variant = OnlineVariant::max_normalized);

// Gaussian prior restricted to mean +- psi * 2 * std, by rejection.
Vector truncated_draw(const LatentDomain& domain, double psi, Rng& rng);
std::vector<Vector> truncation_sample(const LatentDomain& domain, double psi, std::size_t count,
                                      std::uint64_t seed);

// Pool file (JSON, versioned).
inline constexpr int kPoolFormatVersion = 1;
std::string serialize_pool(const SamplePool& pool);
SamplePool parse_pool(std::string_view text);
void save_pool(const SamplePool& pool, const std::filesystem::path& path);
SamplePool load_pool(const std::filesystem::path& path);

}  // namespace polar
