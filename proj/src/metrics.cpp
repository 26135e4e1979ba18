#include "polar/metrics.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "polar/error.hpp"
#include "polar/parallel.hpp"
#include "polar/rng.hpp"
#include "polar/simd/kernels.hpp"

namespace polar {

SampleSet::SampleSet(RowMatrix points, std::string label)
    : points_(std::move(points)), label_(std::move(label)) {
  if (points_.rows() == 0 || points_.cols() == 0)
    fail(ErrorKind::input, "sample set '" + label_ + "' is empty");
  if (!points_.allFinite()) fail(ErrorKind::input, "sample set '" + label_ + "' has non-finite entries");
}

namespace {

RowMatrix stack(const std::vector<Vector>& points) {
  if (points.empty()) fail(ErrorKind::input, "sample set is empty");
  RowMatrix m(static_cast<Eigen::Index>(points.size()), points.front().size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != m.cols()) fail(ErrorKind::input, "sample set has mixed dimensions");
    m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  }
  return m;
}

void check_same_dim(const SampleSet& a, const SampleSet& b) {
  if (a.dim() != b.dim())
    fail(ErrorKind::input, fmt::format("sample sets '{}' ({}-D) and '{}' ({}-D) differ in dimension",
                                       a.label(), a.dim(), b.label(), b.dim()));
}

void covariance(const SampleSet& s, Vector& mean, Matrix& cov) {
  const RowMatrix& p = s.points();
  mean = p.colwise().mean().transpose();
  const Matrix centered = p.rowwise() - mean.transpose();
  const double denom = s.size() > 1 ? static_cast<double>(s.size() - 1) : 1.0;
  cov = centered.transpose() * centered / denom;
  if (s.size() <= s.dim()) cov += 1e-10 * Matrix::Identity(cov.rows(), cov.cols());
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

SampleSet::SampleSet(const std::vector<Vector>& points, std::string label)
    : SampleSet(stack(points), std::move(label)) {}

SampleSet push_forward(const CpaNetwork& net, const std::vector<Vector>& latents,
                       const CpaNetwork* feature, std::string label) {
  if (latents.empty()) fail(ErrorKind::input, "no latents to push forward");
  const Eigen::Index out = feature ? feature->output_dim() : net.output_dim();
  RowMatrix m(static_cast<Eigen::Index>(latents.size()), out);
  parallel_for(latents.size(), [&](std::size_t i) {
    Vector x = forward(net, latents[i]);
    if (feature) x = forward(*feature, x);
    m.row(static_cast<Eigen::Index>(i)) = x.transpose();
  });
  return SampleSet(std::move(m), std::move(label));
}

double frechet_distance(const SampleSet& a, const SampleSet& b) {
  check_same_dim(a, b);
  Vector mu_a, mu_b;
  Matrix cov_a, cov_b;
  covariance(a, mu_a, cov_a);
  covariance(b, mu_b, cov_b);
  // tr((Sa Sb)^1/2) = tr((Sa^1/2 Sb Sa^1/2)^1/2); the inner product is symmetric.
  const Matrix root_a = psd_sqrt(cov_a);
  Matrix inner = root_a * cov_b * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inner, Eigen::EigenvaluesOnly);
  const double tr_sqrt = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, d);
}

std::vector<double> knn_radii(const SampleSet& set, std::size_t k) {
  if (k < 1 || k >= set.size())
    fail(ErrorKind::input, fmt::format("k = {} needs 1 <= k < {} (size of '{}')", k, set.size(),
                                       set.label()));
  // Neighbors are counted over distinct locations, so resampling with
  // replacement neither shrinks nor grows the manifold estimate.
  const std::size_t n = set.size(), dim = set.dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto row_less = [&](std::size_t a, std::size_t b) {
    const auto ra = set.row(a), rb = set.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(order.begin(), order.end(), row_less);
  std::vector<std::size_t> slot(n);
  std::vector<double> unique;
  unique.reserve(n * dim);
  std::size_t count = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (p == 0 || row_less(order[p - 1], order[p])) {
      const auto r = set.row(order[p]);
      unique.insert(unique.end(), r.begin(), r.end());
      ++count;
    }
    slot[order[p]] = count - 1;
  }

  std::vector<double> unique_radii(count, 0.0);
  if (count > 1) {
    const std::size_t kk = std::min(k, count - 1);
    parallel_for(count, [&](std::size_t i) {
      std::vector<double> d(count);
      simd::squared_l2_rows({unique.data() + i * dim, dim}, unique, dim, d);
      d.erase(d.begin() + static_cast<std::ptrdiff_t>(i));
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk - 1), d.end());
      unique_radii[i] = std::sqrt(d[kk - 1]);
    });
  }
  std::vector<double> radii(n);
  for (std::size_t i = 0; i < n; ++i) radii[i] = unique_radii[slot[i]];
  return radii;
}

namespace {

// Fraction of query points within some reference point's radius.
double coverage(const SampleSet& query, const SampleSet& reference,
                const std::vector<double>& radii) {
  std::vector<double> r2(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) r2[i] = radii[i] * radii[i];
  const std::span<const double> all(reference.points().data(), reference.size() * reference.dim());
  std::vector<std::uint8_t> covered(query.size(), 0);
  parallel_for(query.size(), [&](std::size_t q) {
    std::vector<double> d(reference.size());
    simd::squared_l2_rows(query.row(q), all, reference.dim(), d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] <= r2[i]) {
        covered[q] = 1;
        break;
      }
    }
  });
  const auto hits = std::count(covered.begin(), covered.end(), std::uint8_t{1});
  return static_cast<double>(hits) / static_cast<double>(query.size());
}

}  // namespace

PrecisionRecall precision_recall(const SampleSet& real, const SampleSet& fake, std::size_t k_nn) {
  check_same_dim(real, fake);
  const std::vector<double> real_radii = knn_radii(real, k_nn);
  const std::vector<double> fake_radii = knn_radii(fake, k_nn);
  return {coverage(fake, real, real_radii), coverage(real, fake, fake_radii)};
}

std::vector<double> nn_distances(const SampleSet& generated, const SampleSet& training,
                                 std::size_t j) {
  check_same_dim(generated, training);
  if (j < 1 || j > training.size())
    fail(ErrorKind::input, fmt::format("j = {} needs 1 <= j <= {} training points", j,
                                       training.size()));
  const std::span<const double> all(training.points().data(), training.size() * training.dim());
  std::vector<double> out(generated.size());
  parallel_for(generated.size(), [&](std::size_t g) {
    std::vector<double> d(training.size());
    simd::squared_l2_rows(generated.row(g), all, training.dim(), d);
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(j), d.end());
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += std::sqrt(d[i]);
    out[g] = s / static_cast<double>(j);
  });
  return out;
}

PathLengthResult path_length(const CpaNetwork& net, const CpaNetwork* feature,
                             const std::vector<Vector>& endpoints,
                             const PathLengthOptions& options) {
  if (!(options.epsilon > 0.0)) fail(ErrorKind::input, "path-length epsilon must be positive");
  if (endpoints.size() < 2 || endpoints.size() % 2 != 0)
    fail(ErrorKind::input, "path length needs an even number (>= 2) of endpoints");

  // head maps latents to the interpolation space, tail maps that space out.
  std::optional<CpaNetwork> head, tail;
  if (options.endpoint_space == EndpointSpace::intermediate) {
    if (options.split_layer < 1 || options.split_layer >= net.layers().size())
      fail(ErrorKind::input, fmt::format("split layer {} must be inside (0, {})",
                                         options.split_layer, net.layers().size()));
    head = slice(net, 0, options.split_layer);
    tail = slice(net, options.split_layer, net.layers().size());
  }
  const CpaNetwork& out_net = tail ? *tail : net;
  auto embed = [&](const Vector& w) {
    Vector x = forward(out_net, w);
    return feature ? forward(*feature, x) : x;
  };

  const std::size_t pairs = endpoints.size() / 2;
  Rng rng(derive_seed(options.seed, "path_length"));
  std::vector<double> ts(pairs);
  for (double& t : ts) t = rng.uniform();

  PathLengthResult result;
  result.scores.resize(pairs);
  const double eps = options.epsilon;
  parallel_for(pairs, [&](std::size_t p) {
    Vector a = endpoints[2 * p], b = endpoints[2 * p + 1];
    if (head) {
      a = forward(*head, a);
      b = forward(*head, b);
    }
    const double t = ts[p];
    const Vector w0 = a + t * (b - a);
    const Vector w1 = a + (t + eps) * (b - a);
    result.scores[p] = (embed(w1) - embed(w0)).squaredNorm() / (eps * eps);
  });
  result.mean = std::accumulate(result.scores.begin(), result.scores.end(), 0.0) /
                static_cast<double>(pairs);
  return result;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::input, "quantile of an empty list");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::input, "summary of an empty list");
  Summary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  s.median = quantile_sorted(values, 0.5);
  for (double q : kSummaryQuantiles) s.quantiles.push_back(quantile_sorted(values, q));
  return s;
}

std::vector<std::size_t> histogram_counts(const std::vector<double>& values, std::size_t bins,
                                          double max) {
  if (bins == 0) fail(ErrorKind::input, "histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  if (!(max > 0.0)) {
    counts[0] = values.size();
    return counts;
  }
  for (double v : values) {
    auto b = static_cast<std::size_t>(v / max * static_cast<double>(bins));
    counts[std::min(b, bins - 1)]++;
  }
  return counts;
}

nlohmann::json MetricReport::to_json() const {
  using json = nlohmann::json;
  auto summary = [](const Summary& s) {
    json q = json::object();
    for (std::size_t i = 0; i < s.quantiles.size(); ++i)
      q[fmt::format("q{:02.0f}", kSummaryQuantiles[i] * 100)] = s.quantiles[i];
    return json{{"mean", s.mean}, {"median", s.median}, {"quantiles", q}};
  };
  json j;
  j["config"] = {{"rho", rho}, {"psi", psi}, {"space", space}, {"seed", seed}};
  if (frechet) j["frechet"] = *frechet;
  if (pr) {
    j["precision"] = pr->precision;
    j["recall"] = pr->recall;
  }
  if (nn) {
    j["nn"] = summary(*nn);
    j["nn"]["histogram"] = {{"max", nn_histogram_max}, {"counts", nn_histogram}};
  }
  if (ppl) j["ppl"] = summary(*ppl);
  return j;
}

}  // namespace polar
