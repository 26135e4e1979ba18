#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "polar/density.hpp"
#include "polar/error.hpp"
#include "polar/polarity.hpp"

using namespace polar;
using test::vec;

namespace {

const LatentDomain kLine = LatentDomain::uniform_box(1, -1.0, 1.0);
const LatentDomain kSquare = LatentDomain::uniform_box(2, -1.0, 1.0);

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::input;
}

double density_1d(const RegionAtlas& atlas, double x, double rho) {
  return analytic_density(atlas, vec({x}), rho);
}

}  // namespace

TEST_CASE("atlas of the two-piece net") {
  const RegionAtlas atlas = enumerate_regions(test::two_piece(), kLine);
  CHECK(atlas.complete);
  REQUIRE(atlas.regions.size() == 2);
  double total = 0.0;
  for (const auto& r : atlas.regions) {
    CHECK(std::abs(r.prior_mass - 0.5) <= 1.0 / static_cast<double>(atlas.resolution));
    total += r.prior_mass;
  }
  CHECK(std::abs(total - 1.0) <= 1e-6);
}

TEST_CASE("atlas of a linear net and of a one-hyperplane 2-D net") {
  const CpaNetwork lin("lin", {Layer{test::mat({{2.0, 1.0}}), vec({0.0}), Activation::identity()}});
  const RegionAtlas one = enumerate_regions(lin, kSquare);
  REQUIRE(one.regions.size() == 1);
  CHECK(one.regions[0].prior_mass == doctest::Approx(1.0));

  const RegionAtlas two = enumerate_regions(test::two_region_2d(), kSquare);
  CHECK(two.complete);
  REQUIRE(two.regions.size() == 2);
  for (const auto& r : two.regions)
    CHECK(std::abs(r.prior_mass - 0.5) <= 2.0 / static_cast<double>(two.resolution));
}

TEST_CASE("atlas finds a thin region between grid points") {
  // Units switch at z = 0.30 and z = 0.31; the sliver is narrower than a
  // 32-cell grid step.
  const CpaNetwork net(
      "sliver", {Layer{test::mat({{1.0}, {1.0}}), vec({-0.30, -0.31}), Activation::relu()},
                 Layer{test::mat({{1.0, 1.0}}), vec({0.0}), Activation::identity()}});
  const RegionAtlas atlas = enumerate_regions(net, kLine);
  CHECK(atlas.regions.size() == 3);
}

TEST_CASE("enumeration preconditions") {
  CHECK(kind_of([] { enumerate_regions(test::random_net({4, 3, 2}, 1), LatentDomain::uniform_box(4, -1, 1)); }) ==
        ErrorKind::scale);
  CHECK(kind_of([] { enumerate_regions(test::two_piece(), LatentDomain::gaussian(1, 0, 1)); }) ==
        ErrorKind::domain);
  CHECK(kind_of([] { enumerate_regions(test::two_piece(), kLine, AtlasOptions{.resolution = 16}); }) ==
        ErrorKind::input);
  const RegionAtlas partial =
      enumerate_regions(test::two_piece(), kLine, AtlasOptions{.resolution = 32, .max_cells = 32});
  CHECK_FALSE(partial.complete);
  CHECK(kind_of([&] { analytic_density(partial, vec({0.1}), 0.0); }) == ErrorKind::state);
}

TEST_CASE("two-piece density closed forms") {
  const RegionAtlas atlas = enumerate_regions(test::two_piece(), kLine);
  CHECK(density_1d(atlas, -1.0, 0.0) == doctest::Approx(0.25));
  CHECK(density_1d(atlas, 0.25, 0.0) == doctest::Approx(1.0));
  CHECK(density_1d(atlas, -1.0, 1.0) == doctest::Approx(0.4));
  CHECK(density_1d(atlas, 0.25, 1.0) == doctest::Approx(0.4));
  CHECK(density_1d(atlas, 0.7, 0.0) == 0.0);
  CHECK(density_1d(atlas, -2.5, 0.0) == 0.0);
  for (double rho : {-2.0, -1.0, 0.0, 1.0, 2.0})
    for (double x = -1.95; x < 0.5; x += 0.1)
      CHECK(density_1d(atlas, x, rho) ==
            doctest::Approx(test::two_piece_density(x, rho, 2.0, 0.5)).epsilon(1e-9));
  CHECK(log_density_normalizer(atlas, 1.0) == doctest::Approx(std::log(2.5)));
}

TEST_CASE("identity net density equals the domain density") {
  const RegionAtlas atlas = enumerate_regions(CpaNetwork::identity(2), kSquare);
  for (double rho : {-3.0, 0.0, 2.0}) {
    CHECK(analytic_density(atlas, vec({0.3, -0.4}), rho) == doctest::Approx(0.25));
    CHECK(analytic_density(atlas, vec({1.3, -0.4}), rho) == 0.0);
  }
}

TEST_CASE("densities integrate to one") {
  const RegionAtlas line = enumerate_regions(test::two_piece(), kLine);
  const RegionAtlas folded = enumerate_regions(test::folded(), kLine);
  const RegionAtlas square = enumerate_regions(test::two_region_2d(), kSquare);
  for (double rho : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const double a = test::simpson([&](double x) { return density_1d(line, x, rho); }, -2.5, 1.0,
                                   1e-9, 30);
    CHECK(std::abs(a - 1.0) <= 1e-3);
    // overlapping images: both pre-images contribute on [0, 0.5]
    const double b = test::simpson([&](double x) { return density_1d(folded, x, rho); }, -0.5,
                                   2.5, 1e-9, 30);
    CHECK(std::abs(b - 1.0) <= 1e-3);
    CHECK(density_1d(folded, 0.25, rho) ==
          doctest::Approx(test::two_piece_density(0.25, rho, -2.0, 0.5)));
    const double c = test::simpson_2d(
        [&](double x1, double x2) { return analytic_density(square, vec({x1, x2}), rho); }, -2.1,
        0.6, -1.7, 1.7, 1e-6);
    CHECK(std::abs(c - 1.0) <= 1e-3);
  }
}

TEST_CASE("2-D density matches the hand inversion") {
  const RegionAtlas atlas = enumerate_regions(test::two_region_2d(), kSquare);
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const double x1 = rng.uniform(-2.2, 0.7), x2 = rng.uniform(-1.8, 1.8);
    for (double rho : {-2.0, 0.0, 1.5})
      CHECK(analytic_density(atlas, vec({x1, x2}), rho) ==
            doctest::Approx(test::two_region_density(x1, x2, rho)).epsilon(1e-9));
  }
}

TEST_CASE("off-image points of a low-rank embedding get zero density") {
  // R -> R^2 along the line x2 = 3 x1, piecewise.
  const CpaNetwork embed(
      "embed", {Layer{test::mat({{-1.0}}), vec({0.0}), Activation::leaky_relu(0.5)},
                Layer{test::mat({{-1.0}, {-3.0}}), vec({0.0, 0.0}), Activation::identity()}});
  const RegionAtlas atlas = enumerate_regions(embed, kLine);
  CHECK(analytic_density(atlas, vec({0.2, 0.6}), 0.0) > 0.0);
  CHECK(analytic_density(atlas, vec({0.2, 0.7}), 0.0) == 0.0);
  CHECK(kind_of([&] {
          analytic_histogram(atlas, 0.0, HistogramSpec{vec({0, 0}), vec({1, 1}), {2, 2}});
        }) == ErrorKind::unsupported);
}

TEST_CASE("mode ranking") {
  const RegionAtlas atlas = enumerate_regions(test::two_piece(), kLine);
  const auto neg = mode_regions(atlas, -1.0);
  const auto pos = mode_regions(atlas, 1.0);
  CHECK(atlas.regions[neg.front()].half_log_pdet == doctest::Approx(std::log(0.5)));
  CHECK(atlas.regions[pos.front()].half_log_pdet == doctest::Approx(std::log(2.0)));
  const auto zero = mode_regions(atlas, 0.0);
  CHECK(zero == std::vector<std::size_t>{0, 1});
  // |z|: two regions with equal volumes
  const CpaNetwork abs_net("abs", {Layer{test::mat({{1.0}, {-1.0}}), vec({0.0, 0.0}), Activation::relu()},
                                   Layer{test::mat({{1.0, 1.0}}), vec({0.0}), Activation::identity()}});
  const RegionAtlas ties = enumerate_regions(abs_net, kLine);
  const auto order = mode_regions(ties, -1.0);
  for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);
}

TEST_CASE("histogram spec edges") {
  const HistogramSpec spec = HistogramSpec::uniform(-2.0, 0.5, 50);
  CHECK(spec.bin_of(vec({-2.0})) == 0);
  CHECK(spec.bin_of(vec({0.5})) == 49);
  CHECK(spec.bin_of(vec({0.0})) == 40);
  CHECK(spec.bin_of(vec({0.50001})) == -1);
  CHECK(spec.bin_of(vec({-2.00001})) == -1);
  CHECK(spec.bin_width()[0] == doctest::Approx(0.05));
}

TEST_CASE("identity net histogram is flat within multinomial bands") {
  const CpaNetwork id = CpaNetwork::identity(1);
  Rng rng(8);
  std::vector<Vector> draws;
  const std::size_t n = 50000, bins = 20;
  for (std::size_t i = 0; i < n; ++i) draws.push_back(kLine.sample(rng));
  const Histogram h = mc_density(id, draws, HistogramSpec::uniform(-1.0, 1.0, bins));
  const double p = 1.0 / bins;
  const double band = 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(n));
  double total = 0.0;
  for (double m : h.mass) {
    CHECK(std::abs(m - p) <= band);
    total += m;
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK_THROWS_AS(mc_density(id, {}, HistogramSpec::uniform(-1.0, 1.0, bins)), Error);
}

TEST_CASE("sampled histograms track the analytic density") {
  const CpaNetwork net = test::two_piece();
  const RegionAtlas atlas = enumerate_regions(net, kLine);
  PoolOptions options;
  options.k = 1;
  options.seed = 3;
  const SamplePool pool = build_pool(net, kLine, 50000, options);
  const HistogramSpec spec = HistogramSpec::uniform(-2.0, 0.5, 50);
  for (double rho : {0.0, 1.0}) {
    const Histogram mc = mc_density(net, sample_batch(PolaritySampler(pool, rho), 200000, 4), spec);
    const Histogram exact = analytic_histogram(atlas, rho, spec);
    CHECK(total_variation(mc, exact) <= 0.02);
    // bin masses against the closed form
    for (std::size_t b = 0; b < 50; ++b) {
      const double lo = spec.bin_lo(b)[0], w = spec.bin_width()[0];
      const double oracle = test::simpson(
          [&](double x) { return test::two_piece_density(x, rho, 2.0, 0.5); }, lo, lo + w);
      CHECK(exact.mass[b] == doctest::Approx(oracle).epsilon(1e-6));
    }
  }
}

TEST_CASE("mode concentration grows as rho decreases") {
  const CpaNetwork net = test::two_piece();
  PoolOptions options;
  options.k = 1;
  const SamplePool pool = build_pool(net, kLine, 20000, options);
  double previous = 0.0;
  for (double rho : {0.0, -5.0, -10.0, -20.0}) {
    std::size_t in_mode = 0;
    for (const auto& z : sample_batch(PolaritySampler(pool, rho), 100000, 2)) in_mode += z[0] >= 0.0;
    const double frac = static_cast<double>(in_mode) / 100000.0;
    CHECK(frac >= previous);
    previous = frac;
  }
  CHECK(previous >= 0.999);
}

TEST_CASE("histogram csv layout") {
  const RegionAtlas atlas = enumerate_regions(test::two_piece(), kLine);
  const Histogram h = analytic_histogram(atlas, 0.0, HistogramSpec::uniform(-2.0, 0.5, 5));
  const std::string csv = histogram_csv(h);
  CHECK(csv.rfind("bin_lo,bin_hi,mass\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(serialize_atlas(atlas).find("prior_mass") != std::string::npos);
}
