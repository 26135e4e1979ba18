#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "polar/cpa_net.hpp"

namespace polar {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Nonempty set of finite points of one dimensionality, stored row-major.
class SampleSet {
 public:
  SampleSet(RowMatrix points, std::string label = {});
  SampleSet(const std::vector<Vector>& points, std::string label = {});

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  const RowMatrix& points() const { return points_; }
  const std::string& label() const { return label_; }
  std::span<const double> row(std::size_t i) const {
    return {points_.data() + i * dim(), dim()};
  }

 private:
  RowMatrix points_;
  std::string label_;
};

// Pushes latents through a network (and an optional feature network).
SampleSet push_forward(const CpaNetwork& net, const std::vector<Vector>& latents,
                       const CpaNetwork* feature = nullptr, std::string label = {});

// Squared 2-Wasserstein distance between Gaussian fits (unbiased covariance).
double frechet_distance(const SampleSet& a, const SampleSet& b);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// k-NN manifold estimates: a point is covered by a set if it lies within the
// k-th-neighbor radius of some member of that set.
PrecisionRecall precision_recall(const SampleSet& real, const SampleSet& fake, std::size_t k_nn);

// k-th nearest-neighbor radius of every point within its own set. Exact
// duplicates are merged first, so the neighbors are other distinct
// locations; with fewer than k of them the farthest one is used.
std::vector<double> knn_radii(const SampleSet& set, std::size_t k);

// Mean Euclidean distance from each generated point to its j nearest
// training points.
std::vector<double> nn_distances(const SampleSet& generated, const SampleSet& training,
                                 std::size_t j);

enum class EndpointSpace { latent, intermediate };

struct PathLengthOptions {
  double epsilon = 1e-4;
  EndpointSpace endpoint_space = EndpointSpace::latent;
  // First layer of the generator's second half when interpolating in an
  // intermediate space.
  std::size_t split_layer = 1;
  std::uint64_t seed = 0;
};

struct PathLengthResult {
  std::vector<double> scores;
  double mean = 0.0;
};

// Scores ||F(G(lerp(t))) - F(G(lerp(t + eps)))||^2 / eps^2 over endpoint pairs
// (endpoints[2i], endpoints[2i+1]) with t ~ U[0, 1] per pair. F defaults to
// the identity.
PathLengthResult path_length(const CpaNetwork& net, const CpaNetwork* feature,
                             const std::vector<Vector>& endpoints,
                             const PathLengthOptions& options);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  std::vector<double> quantiles;  // at kSummaryQuantiles
};

inline constexpr double kSummaryQuantiles[] = {0.05, 0.25, 0.5, 0.75, 0.95};

Summary summarize(std::vector<double> values);
// Linear-interpolated quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q);

struct MetricReport {
  std::optional<double> frechet;
  std::optional<PrecisionRecall> pr;
  std::optional<Summary> nn;
  std::vector<std::size_t> nn_histogram;
  double nn_histogram_max = 0.0;
  std::optional<Summary> ppl;
  double rho = 0.0;
  double psi = 1.0;
  std::string space = "output";
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// Equal-width counts of values over [0, max].
std::vector<std::size_t> histogram_counts(const std::vector<double>& values, std::size_t bins,
                                          double max);

}  // namespace polar
