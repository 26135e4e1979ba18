#include "polar/harness/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "polar/error.hpp"
#include "polar/io_util.hpp"

namespace polar::harness {

namespace {

CpaNetwork load_for_config(const std::filesystem::path& path) {
  try {
    return load_model(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
}

std::optional<double> pool_psi(const Experiment& e, double psi) {
  if (e.domain.is_box()) {
    if (psi != 1.0)
      fail(ErrorKind::config,
           fmt::format("psi = {} requested but the truncation baseline needs a gaussian domain", psi));
    return std::nullopt;
  }
  return psi;
}

SampleSet reference_set(const Experiment& e, const std::optional<SyntheticDataset>& spec,
                        const char* name) {
  if (!spec) fail(ErrorKind::config, fmt::format("config: '{}' dataset is required", name));
  if (static_cast<Eigen::Index>(spec->output_dim()) != e.net.output_dim())
    fail(ErrorKind::input, fmt::format("'{}' dataset is {}-D but the model outputs {}-D", name,
                                       spec->output_dim(), e.net.output_dim()));
  return generate(*spec, name);
}

SampleSet generated_set(const Experiment& e, const SamplePool& pool,
                        const std::vector<std::size_t>& idx) {
  std::vector<Vector> latents;
  latents.reserve(idx.size());
  for (std::size_t i : idx) latents.push_back(pool.records[i].z);
  return push_forward(e.net, latents, nullptr, "generated");
}

// Draw seeds do not depend on the rho index: every polarity in a sweep
// reuses the same uniform variates, so rows differ only through the weights.
std::uint64_t sample_seed(const Experiment& e, std::string_view what, std::size_t a,
                          std::size_t b) {
  return derive_seed(e.config.seed, what, {a, b});
}

ParetoRow pareto_row(const Experiment& e, const SampleSet& reference, const SamplePool& pool,
                     double rho, double psi, const std::vector<std::size_t>& idx) {
  const SampleSet generated = generated_set(e, pool, idx);
  const PrecisionRecall pr = precision_recall(reference, generated, e.config.metrics.k_nn);
  return ParetoRow{rho, psi, e.config.seed, pr.precision, pr.recall,
                   frechet_distance(generated, reference)};
}

}  // namespace

Experiment make_experiment(ExperimentConfig config, CpaNetwork net,
                           std::optional<CpaNetwork> feature) {
  config.validate();
  if (feature && feature->input_dim() != net.output_dim())
    fail(ErrorKind::config, fmt::format("feature model takes {} inputs but the model outputs {}",
                                        feature->input_dim(), net.output_dim()));
  LatentDomain domain = config.domain ? *config.domain
                                      : LatentDomain::uniform_box(net.input_dim(), -1.0, 1.0);
  if (domain.dim() != net.input_dim())
    fail(ErrorKind::config, fmt::format("domain has {} dims but the model takes {}", domain.dim(),
                                        net.input_dim()));
  return Experiment{std::move(config), std::move(net), std::move(feature), std::move(domain)};
}

Experiment load_experiment(const ExperimentConfig& config) {
  config.validate();
  CpaNetwork net = load_for_config(config.model);
  std::optional<CpaNetwork> feature;
  if (config.feature_model) feature = load_for_config(*config.feature_model);
  return make_experiment(config, std::move(net), std::move(feature));
}

SamplePool experiment_pool(const Experiment& e, std::size_t n, std::size_t k,
                           std::optional<double> psi, std::uint64_t seed) {
  if (e.config.pool) {
    SamplePool pool = load_pool(*e.config.pool);
    check_pool_matches(pool, e.net, e.feature_ptr());
    if (pool.psi != psi)
      fail(ErrorKind::config, "pool file was built for a different truncation psi");
    return pool;
  }
  PoolOptions options;
  options.k = k;
  options.eps = e.config.eps;
  options.seed = seed;
  options.feature = e.feature_ptr();
  options.sketch_rows = e.config.sketch_rows;
  options.psi = psi;
  return build_pool(e.net, e.domain, n, options);
}

std::vector<ParetoRow> run_pareto(const Experiment& e) {
  const SampleSet reference = reference_set(e, e.config.reference, "reference");
  std::vector<ParetoRow> rows;
  for (std::size_t pi = 0; pi < e.config.psi_grid.size(); ++pi) {
    const double psi = e.config.psi_grid[pi];
    const SamplePool pool = experiment_pool(e, e.config.n, e.config.k, pool_psi(e, psi),
                                            derive_seed(e.config.seed, "pareto_pool", {pi}));
    for (std::size_t ri = 0; ri < e.config.rho_grid.size(); ++ri) {
      const double rho = e.config.rho_grid[ri];
      const PolaritySampler sampler(pool, rho);
      const auto idx =
          sample_batch_indices(sampler, e.config.samples, sample_seed(e, "pareto_sample", pi, 0));
      rows.push_back(pareto_row(e, reference, pool, rho, psi, idx));
    }
  }
  return rows;
}

ParetoRow pareto_control(const Experiment& e, std::size_t psi_index) {
  const double psi = e.config.psi_grid.at(psi_index);
  const SampleSet reference = reference_set(e, e.config.reference, "reference");
  const SamplePool pool = experiment_pool(e, e.config.n, e.config.k, pool_psi(e, psi),
                                          derive_seed(e.config.seed, "pareto_pool", {psi_index}));
  const auto idx = uniform_pool_indices(pool, e.config.samples,
                                        sample_seed(e, "pareto_sample", psi_index, 0));
  return pareto_row(e, reference, pool, 0.0, psi, idx);
}

std::vector<AblationRow> run_ablation(const Experiment& e) {
  if (e.config.n_grid.empty()) fail(ErrorKind::config, "ablation needs a nonempty N grid");
  if (e.config.k_grid.empty()) fail(ErrorKind::config, "ablation needs a nonempty k grid");
  const SampleSet reference = reference_set(e, e.config.reference, "reference");
  const double psi = e.config.psi_grid.front();
  std::vector<AblationRow> rows;
  for (std::size_t ni = 0; ni < e.config.n_grid.size(); ++ni) {
    for (std::size_t ki = 0; ki < e.config.k_grid.size(); ++ki) {
      // Same latents for every k at a given N.
      const SamplePool pool =
          experiment_pool(e, e.config.n_grid[ni], e.config.k_grid[ki], pool_psi(e, psi),
                          derive_seed(e.config.seed, "ablation_pool", {ni}));
      for (std::size_t ri = 0; ri < e.config.rho_grid.size(); ++ri) {
        const double rho = e.config.rho_grid[ri];
        const PolaritySampler sampler(pool, rho);
        const auto idx = sample_batch_indices(sampler, e.config.samples,
                                              sample_seed(e, "ablation_sample", ni, 0));
        const ParetoRow m = pareto_row(e, reference, pool, rho, psi, idx);
        rows.push_back(AblationRow{e.config.n_grid[ni], e.config.k_grid[ki], rho, psi,
                                   e.config.seed, m.frechet, m.precision, m.recall,
                                   pool.distinct_regions()});
      }
    }
  }
  return rows;
}

ModeReport run_modes(const Experiment& e, double rho) {
  const SampleSet reference = reference_set(e, e.config.reference, "reference");
  const SamplePool pool = experiment_pool(e, e.config.n, e.config.k,
                                          pool_psi(e, e.config.psi_grid.front()),
                                          derive_seed(e.config.seed, "modes_pool"));
  const std::vector<double> weights = polarity_weights(pool, rho);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  order.resize(std::min(order.size(), e.config.modes_top));

  std::vector<Vector> outputs;
  for (std::size_t i : order) outputs.push_back(forward(e.net, pool.records[i].z));
  const std::vector<double> nn =
      nn_distances(SampleSet(outputs, "modes"), reference, e.config.metrics.j);

  ModeReport report{rho, e.config.seed, {}, 0.0};
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t i = order[r];
    report.entries.push_back(ModeEntry{r, i, pool.records[i].z, outputs[r],
                                       pool.records[i].log_volume, weights[i], nn[r]});
  }
  report.nn_mean = std::accumulate(nn.begin(), nn.end(), 0.0) / static_cast<double>(nn.size());
  return report;
}

std::vector<ShiftRow> run_shift(const Experiment& e) {
  const SampleSet biased = reference_set(e, e.config.reference_biased, "reference_biased");
  const SampleSet uniform = reference_set(e, e.config.reference_uniform, "reference_uniform");
  const double psi = e.config.psi_grid.front();
  const SamplePool pool = experiment_pool(e, e.config.n, e.config.k, pool_psi(e, psi),
                                          derive_seed(e.config.seed, "shift_pool"));
  std::vector<ShiftRow> rows;
  for (std::size_t ri = 0; ri < e.config.rho_grid.size(); ++ri) {
    const double rho = e.config.rho_grid[ri];
    const PolaritySampler sampler(pool, rho);
    const SampleSet generated = generated_set(
        e, pool,
        sample_batch_indices(sampler, e.config.samples, sample_seed(e, "shift_sample", 0, 0)));
    rows.push_back(ShiftRow{rho, psi, e.config.seed, frechet_distance(generated, biased),
                            frechet_distance(generated, uniform)});
  }
  return rows;
}

std::vector<PplRow> run_ppl(const Experiment& e) {
  const double psi = e.config.psi_grid.front();
  const SamplePool pool = experiment_pool(e, e.config.n, e.config.k, pool_psi(e, psi),
                                          derive_seed(e.config.seed, "ppl_pool"));
  std::vector<PplRow> rows;
  for (std::size_t ri = 0; ri < e.config.rho_grid.size(); ++ri) {
    const double rho = e.config.rho_grid[ri];
    const PolaritySampler sampler(pool, rho);
    const auto endpoints = sample_batch(sampler, 2 * e.config.metrics.n_pairs,
                                        sample_seed(e, "ppl_endpoints", 0, 0));
    PathLengthOptions options;
    options.epsilon = e.config.metrics.epsilon;
    options.endpoint_space = e.config.metrics.endpoint_space;
    options.split_layer = e.config.metrics.split_layer;
    options.seed = sample_seed(e, "ppl_t", 0, 0);
    const PathLengthResult ppl = path_length(e.net, e.feature_ptr(), endpoints, options);
    rows.push_back(PplRow{rho, psi, e.config.seed, summarize(ppl.scores)});
  }
  return rows;
}

nlohmann::json ModeReport::to_json() const {
  using json = nlohmann::json;
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json j;
  j["rho"] = rho;
  j["seed"] = seed;
  j["nn_mean"] = nn_mean;
  json list = json::array();
  for (const auto& m : entries) {
    list.push_back({{"rank", m.rank},
                    {"pool_index", m.pool_index},
                    {"z", vec(m.z)},
                    {"x", vec(m.x)},
                    {"log_volume", m.log_volume},
                    {"weight", m.weight},
                    {"nn_distance", m.nn_distance}});
  }
  j["entries"] = std::move(list);
  return j;
}

namespace {

using io::csv_double;

}  // namespace

std::string to_csv(const std::vector<ParetoRow>& rows) {
  std::string out = "rho,psi,seed,precision,recall,frechet\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{}\n", csv_double(r.rho), csv_double(r.psi), r.seed,
                       csv_double(r.precision), csv_double(r.recall), csv_double(r.frechet));
  return out;
}

std::string to_csv(const std::vector<AblationRow>& rows) {
  std::string out = "N,k,rho,psi,seed,frechet,precision,recall,distinct_regions\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.n, r.k, csv_double(r.rho),
                       csv_double(r.psi), r.seed, csv_double(r.frechet), csv_double(r.precision),
                       csv_double(r.recall), r.distinct_regions);
  return out;
}

std::string to_csv(const std::vector<ShiftRow>& rows) {
  std::string out = "rho,psi,seed,frechet_biased,frechet_uniform\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{}\n", csv_double(r.rho), csv_double(r.psi), r.seed,
                       csv_double(r.frechet_biased), csv_double(r.frechet_uniform));
  return out;
}

std::string to_csv(const std::vector<PplRow>& rows) {
  std::string out = "rho,psi,seed,mean_ppl,median_ppl";
  for (double q : kSummaryQuantiles) out += fmt::format(",q{:02.0f}", q * 100);
  out += "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}", csv_double(r.rho), csv_double(r.psi), r.seed,
                       csv_double(r.ppl.mean), csv_double(r.ppl.median));
    for (double q : r.ppl.quantiles) out += "," + csv_double(q);
    out += "\n";
  }
  return out;
}

}  // namespace polar::harness
