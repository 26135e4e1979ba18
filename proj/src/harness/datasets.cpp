#include "polar/harness/datasets.hpp"

#include <fmt/format.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>

#include "polar/error.hpp"
#include "polar/rng.hpp"

namespace polar::harness {

using json = nlohmann::json;

std::size_t SyntheticDataset::output_dim() const {
  switch (kind) {
    case Kind::gaussian_mixture: return means.empty() ? 0 : means.front().size();
    case Kind::uniform_ring: return 2;
    case Kind::grid_clusters: return dim;
  }
  return 0;
}

void SyntheticDataset::validate() const {
  if (size < 1) fail(ErrorKind::config, "dataset size must be at least 1");
  switch (kind) {
    case Kind::gaussian_mixture: {
      if (weights.empty() || weights.size() != means.size() || weights.size() != covs.size())
        fail(ErrorKind::config, "mixture needs matching weights, means and covs");
      double total = 0.0;
      for (double w : weights) {
        if (!(w >= 0.0)) fail(ErrorKind::config, "mixture weights must be nonnegative");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-9)
        fail(ErrorKind::config, fmt::format("mixture weights sum to {}, not 1", total));
      const std::size_t d = means.front().size();
      for (std::size_t c = 0; c < means.size(); ++c) {
        if (means[c].size() != d || covs[c].size() != d)
          fail(ErrorKind::config, fmt::format("mixture component {} has inconsistent dims", c));
        for (const auto& row : covs[c])
          if (row.size() != d) fail(ErrorKind::config, fmt::format("component {} cov not square", c));
      }
      break;
    }
    case Kind::uniform_ring:
      if (center.size() != 2 || !(radius > 0.0) || !(width > 0.0) || width > 2.0 * radius)
        fail(ErrorKind::config, "ring needs a 2-D center and 0 < width <= 2 * radius");
      break;
    case Kind::grid_clusters:
      if (dim < 1 || per_axis < 1 || !(cluster_std > 0.0))
        fail(ErrorKind::config, "grid clusters need dim, per_axis >= 1 and positive std");
      break;
  }
}

SampleSet generate(const SyntheticDataset& spec, std::string label) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "dataset"));
  const auto d = static_cast<Eigen::Index>(spec.output_dim());
  RowMatrix out(static_cast<Eigen::Index>(spec.size), d);

  if (spec.kind == SyntheticDataset::Kind::gaussian_mixture) {
    std::vector<Matrix> factors;
    for (const auto& cov : spec.covs) {
      Matrix c(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          c(i, j) = cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      Eigen::LDLT<Matrix> ldlt(c);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        fail(ErrorKind::config, "mixture covariance is not positive semidefinite");
      // L * sqrt(D) with the permutation folded back in.
      Matrix l = ldlt.transpositionsP().transpose() * Matrix(ldlt.matrixL());
      factors.push_back(l * ldlt.vectorD().cwiseMax(0.0).cwiseSqrt().asDiagonal());
    }
    std::vector<double> cumulative;
    double acc = 0.0;
    for (double w : spec.weights) cumulative.push_back(acc += w);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double u = rng.uniform() * acc;
      std::size_t c = 0;
      while (c + 1 < cumulative.size() && u >= cumulative[c]) ++c;
      Vector g(d);
      for (Eigen::Index k = 0; k < d; ++k) g[k] = rng.normal();
      const Vector mean = Eigen::Map<const Vector>(spec.means[c].data(), d);
      out.row(i) = (mean + factors[c] * g).transpose();
    }
  } else if (spec.kind == SyntheticDataset::Kind::uniform_ring) {
    const double r_in = spec.radius - 0.5 * spec.width;
    const double r_out = spec.radius + 0.5 * spec.width;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      // Area-uniform radius.
      const double r = std::sqrt(rng.uniform(r_in * r_in, r_out * r_out));
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      out(i, 0) = spec.center[0] + r * std::cos(a);
      out(i, 1) = spec.center[1] + r * std::sin(a);
    }
  } else {
    const std::size_t clusters = static_cast<std::size_t>(std::pow(spec.per_axis, spec.dim));
    const double offset = 0.5 * spec.spacing * static_cast<double>(spec.per_axis - 1);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      std::size_t c = rng.below(clusters);
      for (Eigen::Index k = d; k-- > 0;) {
        const auto idx = static_cast<double>(c % spec.per_axis);
        c /= spec.per_axis;
        out(i, k) = idx * spec.spacing - offset + spec.cluster_std * rng.normal();
      }
    }
  }
  return SampleSet(std::move(out), std::move(label));
}

json SyntheticDataset::to_json() const {
  json j;
  j["size"] = size;
  j["seed"] = seed;
  switch (kind) {
    case Kind::gaussian_mixture:
      j["kind"] = "gaussian_mixture";
      j["weights"] = weights;
      j["means"] = means;
      j["covs"] = covs;
      break;
    case Kind::uniform_ring:
      j["kind"] = "uniform_ring";
      j["center"] = center;
      j["radius"] = radius;
      j["width"] = width;
      break;
    case Kind::grid_clusters:
      j["kind"] = "grid_clusters";
      j["dim"] = dim;
      j["per_axis"] = per_axis;
      j["spacing"] = spacing;
      j["cluster_std"] = cluster_std;
      break;
  }
  return j;
}

SyntheticDataset SyntheticDataset::from_json(const json& j) {
  SyntheticDataset s;
  try {
    const auto kind = j.at("kind").get<std::string>();
    s.size = j.value("size", s.size);
    s.seed = j.value("seed", s.seed);
    if (kind == "gaussian_mixture") {
      s.kind = Kind::gaussian_mixture;
      s.weights = j.at("weights").get<std::vector<double>>();
      s.means = j.at("means").get<std::vector<std::vector<double>>>();
      s.covs = j.at("covs").get<std::vector<std::vector<std::vector<double>>>>();
    } else if (kind == "uniform_ring") {
      s.kind = Kind::uniform_ring;
      s.center = j.value("center", s.center);
      s.radius = j.value("radius", s.radius);
      s.width = j.value("width", s.width);
    } else if (kind == "grid_clusters") {
      s.kind = Kind::grid_clusters;
      s.dim = j.value("dim", s.dim);
      s.per_axis = j.value("per_axis", s.per_axis);
      s.spacing = j.value("spacing", s.spacing);
      s.cluster_std = j.value("cluster_std", s.cluster_std);
    } else {
      fail(ErrorKind::config, "dataset.kind: unknown kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::config, fmt::format("dataset: {}", e.what()));
  }
  s.validate();
  return s;
}

}  // namespace polar::harness
