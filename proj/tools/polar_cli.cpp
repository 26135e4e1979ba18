// polar: command-line front end for polarity-reweighted sampling of
// piecewise-affine generators and the accompanying experiment sweeps.
//
//   polar pool build --model g.json --domain uniform:-1:1 --N 200000 --k 30 --out pool.json
//   polar sample --model g.json --pool pool.json --rho -1 --count 1000 --out samples.csv
//   polar density eval --model g.json --rho 0 --bins 50 --out hist.csv
//   polar pareto --config sweep.json --out results/
//   polar metrics --real a.csv --fake b.csv --out report.json
//
// Exit codes: 0 success, 2 config/input error, 3 numerical error or timeout.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "polar/density.hpp"
#include "polar/error.hpp"
#include "polar/harness/config.hpp"
#include "polar/harness/experiments.hpp"
#include "polar/io_util.hpp"
#include "polar/metrics.hpp"
#include "polar/polarity.hpp"

namespace fs = std::filesystem;
using namespace polar;

namespace {

struct GlobalFlags {
  std::string model;
  std::string feature_model;
  std::string pool;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) fail(ErrorKind::config, fmt::format("{} is required", flag));
  return value;
}

std::optional<CpaNetwork> load_feature(const GlobalFlags& g) {
  if (g.feature_model.empty()) return std::nullopt;
  return load_model(g.feature_model);
}

// Numeric CSV; a header row is skipped. With a prefix, only columns whose
// header starts with it are kept.
std::vector<Vector> read_points(const fs::path& path, const std::string& prefix) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::vector<std::size_t> keep;
  std::vector<Vector> points;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    auto numeric = [](const std::string& s) {
      char* end = nullptr;
      std::strtod(s.c_str(), &end);
      return end != s.c_str() && *end == '\0';
    };
    if (first) {
      first = false;
      if (!std::all_of(cells.begin(), cells.end(), numeric)) {
        for (std::size_t c = 0; c < cells.size(); ++c)
          if (prefix.empty() || cells[c].rfind(prefix, 0) == 0) keep.push_back(c);
        continue;
      }
    }
    if (keep.empty())
      for (std::size_t c = 0; c < cells.size(); ++c) keep.push_back(c);
    Vector p(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (keep[i] >= cells.size() || !numeric(cells[keep[i]]))
        fail(ErrorKind::parse, fmt::format("{} line {}: column {} is not a number", path.string(),
                                           line_no, keep[i] + 1));
      p[static_cast<Eigen::Index>(i)] = std::strtod(cells[keep[i]].c_str(), nullptr);
    }
    points.push_back(std::move(p));
  }
  if (points.empty()) fail(ErrorKind::input, path.string() + ": no data rows");
  return points;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    io::write_file(out, text);
}

harness::ExperimentConfig experiment_config(const GlobalFlags& g) {
  harness::ExperimentConfig c = harness::ExperimentConfig::load(require(g.config, "--config"));
  if (!g.model.empty()) c.model = g.model;
  if (!g.feature_model.empty()) c.feature_model = fs::path(g.feature_model);
  if (!g.pool.empty()) c.pool = fs::path(g.pool);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.out_dir = g.out;
  return c;
}

void write_result(const harness::ExperimentConfig& c, const char* name, const std::string& text) {
  const fs::path path = c.out_dir / name;
  io::write_file(path, text);
  std::cerr << "wrote " << path.string() << "\n";
}

// Bounding box of the output image sampled on a grid over the domain.
std::pair<Vector, Vector> image_bounds(const CpaNetwork& net, const LatentDomain& domain) {
  const Eigen::Index k = domain.dim();
  const std::size_t per_axis = k == 1 ? 4097 : (k == 2 ? 257 : 33);
  std::size_t total = 1;
  for (Eigen::Index d = 0; d < k; ++d) total *= per_axis;
  Vector lo = Vector::Constant(net.output_dim(), std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  for (std::size_t c = 0; c < total; ++c) {
    Vector z(k);
    std::size_t flat = c;
    for (Eigen::Index d = 0; d < k; ++d) {
      const double t = static_cast<double>(flat % per_axis) / static_cast<double>(per_axis - 1);
      flat /= per_axis;
      z[d] = domain.lo()[d] + t * (domain.hi()[d] - domain.lo()[d]);
    }
    const Vector x = forward(net, z);
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const Vector pad = 1e-3 * (hi - lo).cwiseMax(1e-9);
  return {lo - pad, hi + pad};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polarity-reweighted sampling for piecewise-affine generators"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--model", g.model, "Generator model file");
  app.add_option("--feature-model", g.feature_model, "Feature network composed after the generator");
  app.add_option("--pool", g.pool, "Pool file");
  app.add_option("--config", g.config, "Experiment config file");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output file (or directory for experiment sweeps)");

  // pool build
  auto* pool_cmd = app.add_subcommand("pool", "Candidate pools");
  pool_cmd->require_subcommand(1);
  auto* pool_build = pool_cmd->add_subcommand("build", "Build a pool of scored latents");
  std::string domain_spec = "uniform:-1:1";
  std::size_t pool_n = kDefaultPoolSize, pool_k = kDefaultTopK;
  double pool_eps = kDefaultLogEps;
  Eigen::Index sketch_rows = 0;
  std::optional<double> pool_psi;
  bool keep_spectra = false;
  pool_build->add_option("--domain", domain_spec, "uniform:LO:HI or gaussian:MEAN:STD");
  pool_build->add_option("--N", pool_n, "Pool size")->check(CLI::PositiveNumber);
  auto* k_opt = pool_build->add_option("--k", pool_k, "Top singular values per Jacobian (default: min(30, D, K))")
                    ->check(CLI::PositiveNumber);
  pool_build->add_option("--eps", pool_eps, "Guard added inside log(sigma + eps)");
  pool_build->add_option("--sketch-rows", sketch_rows, "Rows of a semi-orthogonal sketch (0 = off)");
  pool_build->add_option("--psi", pool_psi, "Draw latents through the truncation baseline");
  pool_build->add_flag("--keep-spectra", keep_spectra, "Store top-k spectra in the pool file");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Draw latents under a polarity");
  double rho = 0.0;
  std::size_t count = 1000;
  bool online = false;
  std::string variant = "max_normalized";
  std::uint64_t max_rejections = kDefaultMaxRejections;
  sample_cmd->add_option("--rho", rho, "Polarity");
  sample_cmd->add_option("--count", count, "Number of samples")->check(CLI::PositiveNumber);
  sample_cmd->add_flag("--online", online, "Use the online rejection sampler");
  sample_cmd->add_option("--variant", variant, "paper_faithful or max_normalized");
  sample_cmd->add_option("--max-rejections", max_rejections, "Online stall limit");

  // density eval
  auto* density_cmd = app.add_subcommand("density", "Analytic output densities");
  density_cmd->require_subcommand(1);
  auto* density_eval = density_cmd->add_subcommand("eval", "Analytic density histogram");
  std::string density_domain = "uniform:-1:1";
  double density_rho = 0.0;
  std::vector<std::size_t> bins{50};
  std::vector<double> lo, hi;
  std::size_t resolution = 32, subdivisions = 16, mc_count = 0;
  std::string points_path, atlas_out, mc_out;
  density_eval->add_option("--domain", density_domain, "uniform:LO:HI box domain");
  density_eval->add_option("--rho", density_rho, "Polarity");
  density_eval->add_option("--bins", bins, "Bins per output axis");
  density_eval->add_option("--lo", lo, "Histogram lower corner (default: image bounds)");
  density_eval->add_option("--hi", hi, "Histogram upper corner (default: image bounds)");
  density_eval->add_option("--resolution", resolution, "Initial probe grid per axis");
  density_eval->add_option("--subdivisions", subdivisions, "Quadrature cells per bin per axis");
  density_eval->add_option("--points", points_path, "CSV of output points to evaluate");
  density_eval->add_option("--atlas-out", atlas_out, "Write the region atlas here");
  density_eval->add_option("--mc-count", mc_count, "Also histogram this many pool draws");
  density_eval->add_option("--mc-out", mc_out, "Monte-Carlo histogram CSV");

  auto* pareto_cmd = app.add_subcommand("pareto", "Precision/recall/Frechet over rho x psi");
  auto* ablate_cmd = app.add_subcommand("ablate", "Metrics over N x k");
  auto* modes_cmd = app.add_subcommand("modes", "Highest-weight latents for an extreme rho");
  std::optional<double> modes_rho;
  modes_cmd->add_option("--rho", modes_rho, "Polarity (default: config rho_extreme)");
  auto* shift_cmd = app.add_subcommand("shift", "Frechet to biased and uniform references over rho");
  auto* ppl_cmd = app.add_subcommand("ppl", "Path-length distribution over rho");

  auto* metrics_cmd = app.add_subcommand("metrics", "Metrics between two point sets");
  std::string real_path, fake_path, columns;
  std::size_t k_nn = 3, nn_j = 3, nn_bins = 20;
  metrics_cmd->add_option("--real", real_path, "Reference points CSV")->required();
  metrics_cmd->add_option("--fake", fake_path, "Generated points CSV")->required();
  metrics_cmd->add_option("--columns", columns, "Use only columns whose header has this prefix");
  metrics_cmd->add_option("--k-nn", k_nn, "Neighbor index for manifold radii");
  metrics_cmd->add_option("--j", nn_j, "Nearest training points per distance");
  metrics_cmd->add_option("--nn-bins", nn_bins, "Bins of the distance histogram");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (pool_build->parsed()) {
      const CpaNetwork net = load_model(require(g.model, "--model"));
      const auto feature = load_feature(g);
      PoolOptions options;
      options.k = pool_k;
      if (k_opt->count() == 0) {
        const Eigen::Index rows = sketch_rows > 0 ? sketch_rows : net.output_dim();
        options.k = std::min<std::size_t>(pool_k, static_cast<std::size_t>(std::min(rows, net.input_dim())));
      }
      options.eps = pool_eps;
      options.seed = g.seed.value_or(0);
      options.feature = feature ? &*feature : nullptr;
      options.sketch_rows = sketch_rows;
      options.psi = pool_psi;
      options.keep_spectra = keep_spectra;
      const LatentDomain domain = LatentDomain::parse(domain_spec, net.input_dim());
      const SamplePool pool = build_pool(net, domain, pool_n, options);
      save_pool(pool, require(g.out, "--out"));
      std::cerr << fmt::format("pool: {} records, {} distinct regions\n", pool.size(),
                               pool.distinct_regions());
    } else if (sample_cmd->parsed()) {
      const CpaNetwork net = load_model(require(g.model, "--model"));
      const auto feature = load_feature(g);
      const SamplePool pool = load_pool(require(g.pool, "--pool"));
      check_pool_matches(pool, net, feature ? &*feature : nullptr);
      const std::uint64_t seed = g.seed.value_or(0);
      std::vector<Vector> latents;
      if (online) {
        OnlineSampler sampler(pool, net, feature ? &*feature : nullptr, rho, seed,
                              parse_online_variant(variant), max_rejections);
        for (std::size_t i = 0; i < count; ++i) latents.push_back(sampler.next());
        std::cerr << fmt::format("online acceptance rate {:.4g}\n",
                                 static_cast<double>(sampler.accepted()) /
                                     static_cast<double>(sampler.proposals()));
      } else {
        latents = sample_batch(PolaritySampler(pool, rho), count, seed);
      }
      std::string csv = "rho,seed,index";
      for (Eigen::Index d = 0; d < net.input_dim(); ++d) csv += fmt::format(",z{}", d);
      for (Eigen::Index d = 0; d < net.output_dim(); ++d) csv += fmt::format(",x{}", d);
      csv += "\n";
      for (std::size_t i = 0; i < latents.size(); ++i) {
        csv += fmt::format("{},{},{}", io::csv_double(rho), seed, i);
        for (double v : latents[i]) csv += "," + io::csv_double(v);
        for (double v : forward(net, latents[i])) csv += "," + io::csv_double(v);
        csv += "\n";
      }
      emit(g.out, csv);
    } else if (density_eval->parsed()) {
      const CpaNetwork net = load_model(require(g.model, "--model"));
      const LatentDomain domain = LatentDomain::parse(density_domain, net.input_dim());
      AtlasOptions atlas_options;
      atlas_options.resolution = resolution;
      atlas_options.seed = g.seed.value_or(0);
      const RegionAtlas atlas = enumerate_regions(net, domain, atlas_options);
      std::cerr << fmt::format("atlas: {} regions at resolution {}, {}\n", atlas.regions.size(),
                               atlas.resolution, atlas.complete ? "complete" : "INCOMPLETE");
      if (!atlas_out.empty()) io::write_file(atlas_out, serialize_atlas(atlas));
      if (!points_path.empty()) {
        std::string csv;
        for (Eigen::Index d = 0; d < net.output_dim(); ++d) csv += fmt::format("x{},", d);
        csv += "density\n";
        for (const Vector& x : read_points(points_path, "")) {
          for (double v : x) csv += io::csv_double(v) + ",";
          csv += io::csv_double(analytic_density(atlas, x, density_rho)) + "\n";
        }
        emit(g.out, csv);
      } else {
        const auto dims = static_cast<std::size_t>(net.output_dim());
        HistogramSpec spec;
        if (bins.size() == 1) bins.assign(dims, bins.front());
        if (bins.size() != dims) fail(ErrorKind::config, "--bins needs one value or one per axis");
        spec.bins = bins;
        if (lo.empty() || hi.empty()) {
          auto [blo, bhi] = image_bounds(net, domain);
          spec.lo = blo;
          spec.hi = bhi;
        }
        if (!lo.empty()) spec.lo = Eigen::Map<const Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
        if (!hi.empty()) spec.hi = Eigen::Map<const Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
        const Histogram analytic = analytic_histogram(atlas, density_rho, spec, subdivisions);
        emit(g.out, histogram_csv(analytic));
        if (mc_count > 0) {
          const SamplePool pool = load_pool(require(g.pool, "--pool"));
          check_pool_matches(pool, net);
          const auto draws = sample_batch(PolaritySampler(pool, density_rho), mc_count,
                                          g.seed.value_or(0));
          const Histogram mc = mc_density(net, draws, spec);
          if (!mc_out.empty()) io::write_file(mc_out, histogram_csv(mc));
          std::cerr << fmt::format("total variation (mc vs analytic): {:.6f}\n",
                                   total_variation(mc, analytic));
        }
      }
    } else if (pareto_cmd->parsed()) {
      const auto c = experiment_config(g);
      write_result(c, "pareto.csv", harness::to_csv(harness::run_pareto(harness::load_experiment(c))));
    } else if (ablate_cmd->parsed()) {
      const auto c = experiment_config(g);
      write_result(c, "ablation.csv",
                   harness::to_csv(harness::run_ablation(harness::load_experiment(c))));
    } else if (modes_cmd->parsed()) {
      const auto c = experiment_config(g);
      const auto report = harness::run_modes(harness::load_experiment(c), modes_rho.value_or(c.rho_extreme));
      write_result(c, "modes.json", report.to_json().dump(2) + "\n");
    } else if (shift_cmd->parsed()) {
      const auto c = experiment_config(g);
      write_result(c, "shift.csv", harness::to_csv(harness::run_shift(harness::load_experiment(c))));
    } else if (ppl_cmd->parsed()) {
      const auto c = experiment_config(g);
      write_result(c, "ppl.csv", harness::to_csv(harness::run_ppl(harness::load_experiment(c))));
    } else if (metrics_cmd->parsed()) {
      const SampleSet real(read_points(real_path, columns), "real");
      const SampleSet fake(read_points(fake_path, columns), "fake");
      MetricReport report;
      report.seed = g.seed.value_or(0);
      report.frechet = frechet_distance(real, fake);
      report.pr = precision_recall(real, fake, k_nn);
      const auto nn = nn_distances(fake, real, nn_j);
      report.nn = summarize(nn);
      report.nn_histogram_max = *std::max_element(nn.begin(), nn.end());
      report.nn_histogram = histogram_counts(nn, nn_bins, report.nn_histogram_max);
      emit(g.out, report.to_json().dump(2) + "\n");
    }
  } catch (const Error& e) {
    std::cerr << "polar: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "polar: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
