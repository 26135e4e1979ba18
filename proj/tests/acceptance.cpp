// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polar/density.hpp"
#include "polar/io_util.hpp"
#include "polar/metrics.hpp"
#include "polar/polarity.hpp"
#include "setups.hpp"

using namespace polar;
using test::vec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

const LatentDomain kLine = LatentDomain::uniform_box(1, -1.0, 1.0);
const LatentDomain kSquare = LatentDomain::uniform_box(2, -1.0, 1.0);

SamplePool pool_for(const CpaNetwork& net, const LatentDomain& domain, std::size_t n,
                    std::uint64_t seed) {
  PoolOptions options;
  options.k = static_cast<std::size_t>(net.input_dim());
  options.seed = seed;
  return build_pool(net, domain, n, options);
}

double negative_fraction(const std::vector<Vector>& zs) {
  std::size_t neg = 0;
  for (const auto& z : zs) neg += z[0] < 0.0;
  return static_cast<double>(neg) / static_cast<double>(zs.size());
}

Outcome density_law() {
  struct Case {
    const char* name;
    CpaNetwork net;
    LatentDomain domain;
    HistogramSpec spec;
  };
  const std::vector<Case> cases{
      {"1-D", test::two_piece(), kLine, HistogramSpec::uniform(-2.0, 0.5, 50)},
      {"2-D", test::two_region_2d(), kSquare,
       HistogramSpec{vec({-2.0, -1.125}), vec({0.5, 1.5}), {10, 5}}}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const RegionAtlas atlas = enumerate_regions(c.net, c.domain);
    double worst_tv = 0.0, worst_s = 0.0;
    for (double rho : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      const auto t0 = std::chrono::steady_clock::now();
      const SamplePool pool = pool_for(c.net, c.domain, kDefaultPoolSize, 11);
      const auto draws = sample_batch(PolaritySampler(pool, rho), 1000000, 12);
      const Histogram mc = mc_density(c.net, draws, c.spec);
      const Histogram exact = analytic_histogram(atlas, rho, c.spec);
      const double tv = total_variation(mc, exact);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      worst_tv = std::max(worst_tv, tv);
      worst_s = std::max(worst_s, secs);
      ok = ok && atlas.complete && tv <= 0.02 && secs <= 120.0;
    }
    detail += fmt::format("{} max TV {:.4f}, max {:.1f}s/rho; ", c.name, worst_tv, worst_s);
  }
  return {ok, detail};
}

Outcome rho_zero_identity() {
  const CpaNetwork net = test::two_piece();
  const SamplePool pool = pool_for(net, kLine, kDefaultPoolSize, 21);
  std::vector<double> sampled, direct;
  for (const auto& z : sample_batch(PolaritySampler(pool, 0.0), 100000, 22))
    sampled.push_back(forward(net, z)[0]);
  Rng rng(23);
  for (int i = 0; i < 100000; ++i) direct.push_back(forward(net, kLine.sample(rng))[0]);
  const double d = test::ks_statistic(sampled, direct);
  const double crit = test::ks_critical(0.01, sampled.size(), direct.size());
  return {d < crit, fmt::format("KS D = {:.5f}, critical {:.5f}", d, crit)};
}

Outcome mode_limits() {
  const CpaNetwork net = test::two_piece();
  const SamplePool pool = pool_for(net, kLine, kDefaultPoolSize, 31);
  // argmin-det region is z >= 0 (slope 0.5), argmax-det is z < 0 (slope 2)
  const double mode = 1.0 - negative_fraction(sample_batch(PolaritySampler(pool, -20.0), 100000, 32));
  const double anti = negative_fraction(sample_batch(PolaritySampler(pool, 20.0), 100000, 33));
  return {mode >= 0.999 && anti >= 0.999,
          fmt::format("mode fraction {:.5f}, anti-mode fraction {:.5f}", mode, anti)};
}

Outcome batch_online() {
  const CpaNetwork net = test::two_piece();
  const SamplePool pool = pool_for(net, kLine, kDefaultPoolSize, 41);
  bool ok = true;
  std::string detail;
  for (double rho : {-2.0, 0.0, 2.0}) {
    const double batch = negative_fraction(sample_batch(PolaritySampler(pool, rho), 100000, 42));
    const double online = negative_fraction(sample_online(pool, net, nullptr, rho, 100000, 43));
    ok = ok && std::abs(batch - online) <= 0.02;
    detail += fmt::format("rho={}: {:.4f} vs {:.4f}; ", rho, batch, online);
  }
  return {ok, detail};
}

Outcome jacobian_integrity() {
  Rng rng(51);
  double worst = 0.0;
  std::size_t points = 0;
  for (std::uint64_t n = 0; n < 10; ++n) {
    std::vector<Eigen::Index> widths{1 + static_cast<Eigen::Index>(rng.below(4))};
    const std::size_t depth = 1 + rng.below(4);
    for (std::size_t l = 0; l < depth; ++l) widths.push_back(1 + static_cast<Eigen::Index>(rng.below(32)));
    const CpaNetwork net = test::random_net(widths, 500 + n);
    const double h = 1e-6;
    std::size_t taken = 0;
    while (taken < 100) {
      Vector z(widths.front());
      for (auto& v : z) v = rng.uniform(-1.0, 1.0);
      // central differences are only meaningful away from region boundaries
      if (min_abs_preactivation(net, z) < 1e-3) continue;
      const AffineMap m = affine_map(net, z);
      const Matrix fd = test::fd_jacobian(net, z, h);
      const double scale = std::max(m.slope.norm(), 1e-300);
      worst = std::max(worst, (fd - m.slope).norm() / scale);
      worst = std::max(worst, (m.apply(z) - forward(net, z)).norm() / (1.0 + forward(net, z).norm()));
      ++taken;
      ++points;
    }
  }
  return {worst <= 1e-6 && points == 1000,
          fmt::format("{} points on 10 nets, max relative error {:.3g}", points, worst)};
}

Outcome spectral_identities() {
  Rng rng(61);
  double worst_det = 0.0, worst_sketch = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(8));
    const Eigen::Index d = k + static_cast<Eigen::Index>(rng.below(8));
    Matrix a(d, k);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < k; ++j) a(i, j) = rng.normal();
    const double det = test::gauss_det(a.transpose() * a);
    worst_det = std::max(worst_det, std::abs(std::exp(2.0 * half_log_pseudo_det(a)) - det) / std::abs(det));
    const Matrix w = random_semi_orthogonal(d, d, 700 + static_cast<std::uint64_t>(t));
    const auto full = top_k_singular_values(a, static_cast<std::size_t>(k));
    const auto sk = sketch_spectrum(a, w, static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < full.k(); ++i)
      worst_sketch = std::max(worst_sketch, std::abs(full.values[i] - sk.values[i]) / full.values[0]);
  }
  return {worst_det <= 1e-8 && worst_sketch <= 1e-9,
          fmt::format("det rel err {:.3g}, sketch rel err {:.3g}", worst_det, worst_sketch)};
}

std::vector<Vector> exact_moments(double mean, double sd, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> raw(n);
  for (double& x : raw) x = rng.normal();
  double m = 0.0, v = 0.0;
  for (double x : raw) m += x;
  m /= static_cast<double>(n);
  for (double x : raw) v += (x - m) * (x - m);
  const double s = std::sqrt(v / static_cast<double>(n - 1));
  std::vector<Vector> out;
  for (double x : raw) out.push_back(vec({mean + sd * (x - m) / s}));
  return out;
}

Outcome frechet_closed_forms() {
  Rng rng(71);
  std::vector<Vector> pts;
  for (int i = 0; i < 500; ++i) pts.push_back(vec({rng.normal(), rng.normal(), rng.normal()}));
  const double same = frechet_distance(SampleSet(pts), SampleSet(pts));
  const double shift = frechet_distance(SampleSet(exact_moments(0, 1, 1000, 72)),
                                        SampleSet(exact_moments(1, 1, 1000, 72)));
  const double scale = frechet_distance(SampleSet(exact_moments(0, 1, 1000, 73)),
                                        SampleSet(exact_moments(0, 2, 1000, 73)));
  const bool ok = std::abs(same) <= 1e-10 && std::abs(shift - 1.0) <= 1e-10 &&
                  std::abs(scale - 1.0) <= 1e-8;
  return {ok, fmt::format("identical {:.3g}, mean shift {:.12f}, std 1 vs 2 {:.12f}", same, shift,
                          scale)};
}

Outcome precision_recall_sanity() {
  auto square = [](std::size_t n, double side, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(vec({rng.uniform(0, side), rng.uniform(0, side)}));
    return pts;
  };
  const SampleSet real(square(2000, 1.0, 81));
  const PrecisionRecall same = precision_recall(real, real, 3);
  std::vector<Vector> far;
  for (const auto& p : square(2000, 0.05, 82)) far.push_back(p + vec({40.0, 40.0}));
  const PrecisionRecall disjoint = precision_recall(real, SampleSet(far), 3);
  const PrecisionRecall nested = precision_recall(real, SampleSet(square(2000, 0.5, 83)), 3);
  const bool ok = same.precision == 1.0 && same.recall == 1.0 && disjoint.precision == 0.0 &&
                  disjoint.recall == 0.0 && nested.precision >= 0.95 &&
                  std::abs(nested.recall - 0.25) <= 0.1;
  return {ok, fmt::format("identical ({}, {}), disjoint ({}, {}), nested ({:.4f}, {:.4f})",
                          same.precision, same.recall, disjoint.precision, disjoint.recall,
                          nested.precision, nested.recall)};
}

Outcome pareto_ordering() {
  double p_neg = 0, p_pos = 0, r_neg = 0, r_pos = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rows = harness::run_pareto(test::pareto_setup(seed));
    for (const auto& r : rows) {
      if (r.rho == -2.0) p_neg += r.precision / 5, r_neg += r.recall / 5;
      if (r.rho == 2.0) p_pos += r.precision / 5, r_pos += r.recall / 5;
    }
  }
  return {r_pos - r_neg >= 0.05 && p_neg - p_pos >= 0.05,
          fmt::format("precision {:.4f} (rho=-2) vs {:.4f} (rho=+2), recall {:.4f} vs {:.4f}",
                      p_neg, p_pos, r_neg, r_pos)};
}

Outcome ppl_near_modes() {
  const auto rows = harness::run_ppl(test::ppl_setup(91));
  const double lo = rows.front().ppl.mean, hi = rows.back().ppl.mean;
  return {lo * 10.0 <= hi, fmt::format("mean PPL {:.5f} (rho=-20) vs {:.5f} (rho=+20), ratio {:.2f}",
                                       lo, hi, hi / lo)};
}

Outcome shift_adaptation() {
  std::vector<double> mean_uniform;
  std::vector<double> rhos;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto rows = harness::run_shift(test::shift_setup(seed));
    if (mean_uniform.empty()) {
      mean_uniform.assign(rows.size(), 0.0);
      for (const auto& r : rows) rhos.push_back(r.rho);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) mean_uniform[i] += rows[i].frechet_uniform / 5;
  }
  std::size_t best = 0, zero = 0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    if (mean_uniform[i] < mean_uniform[best]) best = i;
    if (rhos[i] == 0.0) zero = i;
  }
  const double reduction = 1.0 - mean_uniform[best] / mean_uniform[zero];
  return {rhos[best] != 0.0 && reduction >= 0.2,
          fmt::format("argmin rho {} ({:.5f}) vs rho 0 ({:.5f}), reduction {:.1f}%", rhos[best],
                      mean_uniform[best], mean_uniform[zero], 100 * reduction)};
}

int run_cli(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} 2>/dev/null", POLAR_CLI_PATH, args);
  return std::system(cmd.c_str());
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / fmt::format("polar_accept_{}", ::getpid());
  fs::create_directories(dir);
  save_model(test::bimodal(), dir / "bimodal.json");
  harness::ExperimentConfig c = test::pareto_setup(5).config;
  c.model = "bimodal.json";
  c.n = 5000;
  c.samples = 1000;
  io::write_file(dir / "config.json", c.serialize());

  const std::string model = (dir / "bimodal.json").string();
  std::vector<std::string> files;
  bool ok = true;
  for (const char* run : {"a", "b"}) {
    const fs::path out = dir / run;
    fs::create_directories(out);
    const std::string o = out.string();
    ok = ok && run_cli(fmt::format("pool build --model {} --N 3000 --seed 9 --out {}/pool.json", model, o)) == 0;
    ok = ok && run_cli(fmt::format("sample --model {} --pool {}/pool.json --rho -1.5 --count 500 --seed 3 --out {}/samples.csv", model, o, o)) == 0;
    ok = ok && run_cli(fmt::format("sample --model {} --pool {}/pool.json --rho 0.5 --count 200 --online --seed 3 --out {}/online.csv", model, o, o)) == 0;
    ok = ok && run_cli(fmt::format("density eval --model {} --rho 1 --bins 40 --out {}/density.csv", model, o)) == 0;
    ok = ok && run_cli(fmt::format("pareto --config {} --seed 17 --out {}", (dir / "config.json").string(), o)) == 0;
    ok = ok && run_cli(fmt::format("metrics --real {}/samples.csv --fake {}/online.csv --columns x --out {}/metrics.json", o, o, o)) == 0;
  }
  std::size_t compared = 0;
  for (const char* f : {"pool.json", "samples.csv", "online.csv", "density.csv", "pareto.csv", "metrics.json"}) {
    if (!fs::exists(dir / "a" / f) || !fs::exists(dir / "b" / f)) {
      ok = false;
      continue;
    }
    ok = ok && io::read_file(dir / "a" / f) == io::read_file(dir / "b" / f);
    ++compared;
  }
  fs::remove_all(dir);
  return {ok, fmt::format("{} output files compared byte-for-byte across two runs", compared)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"density law reproduction", density_law},
      {"rho = 0 identity", rho_zero_identity},
      {"mode and anti-mode limits", mode_limits},
      {"batch/online equivalence", batch_online},
      {"Jacobian integrity", jacobian_integrity},
      {"spectral identities", spectral_identities},
      {"Frechet closed forms", frechet_closed_forms},
      {"precision/recall sanity", precision_recall_sanity},
      {"Pareto ordering", pareto_ordering},
      {"path length near modes", ppl_near_modes},
      {"shift adaptation", shift_adaptation},
      {"CLI reproducibility", reproducibility},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << fmt::format("[{}] {:2d} {}: {}", o.pass ? "PASS" : "FAIL", i + 1,
                             criteria[i].first, o.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
