#include "polar/spectral.hpp"

#include <fmt/format.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "polar/error.hpp"
#include "polar/rng.hpp"

namespace polar {

std::vector<double> singular_values(const Matrix& a) {
  if (a.size() == 0) fail(ErrorKind::input, "singular values of an empty matrix");
  if (!a.allFinite()) fail(ErrorKind::input, "matrix has non-finite entries");
  // Two-sided Jacobi keeps small singular values to full relative accuracy,
  // which the log-volume needs for contracting regions.
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

SpectrumTopK top_k_singular_values(const Matrix& a, std::size_t k) {
  const auto rank_bound = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  if (k < 1 || k > rank_bound)
    fail(ErrorKind::input, fmt::format("k = {} outside [1, {}] for a {}x{} matrix", k, rank_bound,
                                       a.rows(), a.cols()));
  std::vector<double> all = singular_values(a);
  all.resize(k);
  return SpectrumTopK{std::move(all)};
}

LogVolume log_volume(const SpectrumTopK& spectrum, double eps) {
  if (!(eps > 0.0)) fail(ErrorKind::input, "log-volume eps must be positive");
  double s = 0.0;
  for (double v : spectrum.values) s += std::log(v + eps);
  return LogVolume{s};
}

double half_log_pseudo_det(const Matrix& a, std::size_t* rank) {
  const std::vector<double> sv = singular_values(a);
  const double cutoff = kRankCutoff * sv.front();
  double s = 0.0;
  std::size_t r = 0;
  for (double v : sv) {
    if (v > cutoff && v > 0.0) {
      s += std::log(v);
      ++r;
    }
  }
  if (rank) *rank = r;
  return s;
}

Matrix pseudo_inverse(const Matrix& a) {
  if (!a.allFinite()) fail(ErrorKind::input, "matrix has non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() ? kRankCutoff * s[0] : 0.0;
  Vector inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv[i] = (s[i] > cutoff && s[i] > 0.0) ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix random_semi_orthogonal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) fail(ErrorKind::input, "semi-orthogonal shape must be positive");
  if (rows > cols)
    fail(ErrorKind::input,
         fmt::format("semi-orthogonal matrix needs rows <= cols, got {}x{}", rows, cols));
  Rng rng(derive_seed(seed, "semi_orthogonal", {static_cast<std::uint64_t>(rows),
                                                static_cast<std::uint64_t>(cols)}));
  Matrix g(cols, rows);  // columns become the orthonormal rows of W
  for (Eigen::Index c = 0; c < rows; ++c)
    for (Eigen::Index r = 0; r < cols; ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(cols, rows);
  // Fix column signs so the factor is unique for a given draw.
  const Matrix r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < rows; ++c)
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  return q.transpose();
}

SpectrumTopK sketch_spectrum(const Matrix& a, const Matrix& w, std::size_t k) {
  if (w.cols() != a.rows())
    fail(ErrorKind::input, fmt::format("sketch is {}x{} but the slope has {} rows", w.rows(),
                                       w.cols(), a.rows()));
  return top_k_singular_values(w * a, k);
}

VolumeScorer::VolumeScorer(const CpaNetwork& net, std::size_t k, double eps,
                           std::optional<Matrix> sketch)
    : net_(&net), k_(k), eps_(eps), sketch_(std::move(sketch)) {
  const auto out_rows = sketch_ ? sketch_->rows() : net.output_dim();
  const auto bound = static_cast<std::size_t>(std::min(out_rows, net.input_dim()));
  if (k_ < 1 || k_ > bound)
    fail(ErrorKind::input, fmt::format("k = {} outside [1, {}] for network '{}'", k_, bound,
                                       net.name()));
  if (sketch_ && sketch_->cols() != net.output_dim())
    fail(ErrorKind::input, fmt::format("sketch has {} columns, network outputs {}",
                                       sketch_->cols(), net.output_dim()));
  if (!(eps_ > 0.0)) fail(ErrorKind::input, "log-volume eps must be positive");
}

SpectrumTopK VolumeScorer::spectrum(const Vector& z) const {
  const Matrix j = jacobian(*net_, z);
  return sketch_ ? sketch_spectrum(j, *sketch_, k_) : top_k_singular_values(j, k_);
}

double VolumeScorer::log_volume(const Vector& z) const {
  return polar::log_volume(spectrum(z), eps_).value;
}

}  // namespace polar
