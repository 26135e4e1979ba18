#pragma once

// Small generators with hand-computable densities.

#include <cmath>

#include "polar/cpa_net.hpp"
#include "polar/rng.hpp"

namespace polar::test {

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// x = 2z for z < 0, x = z/2 for z >= 0. On U[-1, 1] the output density is
// 1/4 on [-2, 0) and 1 on [0, 0.5].
inline CpaNetwork two_piece() {
  return CpaNetwork("two_piece", {Layer{mat({{-1.0}}), vec({0.0}), Activation::leaky_relu(0.25)},
                                  Layer{mat({{-2.0}}), vec({0.0}), Activation::identity()}});
}

// x = -2z for z < 0, x = z/2 for z >= 0: both pieces land on [0, ...).
inline CpaNetwork folded() {
  return CpaNetwork("folded", {Layer{mat({{-1.0}, {1.0}}), vec({0.0, 0.0}), Activation::relu()},
                               Layer{mat({{2.0, 0.5}}), vec({0.0}), Activation::identity()}});
}

// Split on z1 = 0. For z1 < 0: x = (2 z1, z2 - z1/2), det 2. For z1 >= 0:
// x = (z1/2, z2 - z1/8), det 0.5. The second unit never switches on [-1, 1]^2.
inline CpaNetwork two_region_2d() {
  return CpaNetwork("two_region_2d",
                    {Layer{mat({{-1.0, 0.0}, {0.0, 1.0}}), vec({0.0, 10.0}),
                           Activation::leaky_relu(0.25)},
                     Layer{mat({{-2.0, 0.0}, {0.5, 1.0}}), vec({0.0, -10.0}),
                           Activation::identity()}});
}

// Slope 10 for z < 0 and 0.01 for z > 0: a dense mode near 0 and a long,
// sparse anti-mode tail on the negative side.
inline CpaNetwork bimodal() {
  return CpaNetwork("bimodal", {Layer{mat({{-1.0}}), vec({0.0}), Activation::leaky_relu(0.001)},
                                Layer{mat({{-10.0}}), vec({0.0}), Activation::identity()}});
}

// diag(s(z1), 0.3) with s = 2 for z1 < 0 and 0.5 otherwise; the second
// singular value never changes between regions.
inline CpaNetwork trailing_sigma() {
  return CpaNetwork("trailing_sigma",
                    {Layer{mat({{-1.0, 0.0}, {0.0, 1.0}}), vec({0.0, 10.0}),
                           Activation::leaky_relu(0.25)},
                     Layer{mat({{-2.0, 0.0}, {0.0, 0.3}}), vec({0.0, -3.0}),
                           Activation::identity()}});
}

// Random leaky-ReLU net with the given widths (widths.front() = K).
inline CpaNetwork random_net(const std::vector<Eigen::Index>& widths, std::uint64_t seed,
                             double alpha = 0.2) {
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer layer;
    layer.weight = Matrix(widths[l + 1], widths[l]);
    layer.bias = Vector(widths[l + 1]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = scale * rng.normal();
      layer.bias[r] = 0.1 * rng.normal();
    }
    layer.activation =
        l + 2 == widths.size() ? Activation::identity() : Activation::leaky_relu(alpha);
    layers.push_back(std::move(layer));
  }
  return CpaNetwork("random", std::move(layers));
}

}  // namespace polar::test
