#include "polar/harness/config.hpp"

#include <fmt/format.h>

#include <cmath>

#include "polar/error.hpp"
#include "polar/io_util.hpp"

namespace polar::harness {

using json = nlohmann::json;

void ExperimentConfig::validate() const {
  if (model.empty()) fail(ErrorKind::config, "config: 'model' is required");
  if (rho_grid.empty()) fail(ErrorKind::config, "config: rho grid is empty");
  if (psi_grid.empty()) fail(ErrorKind::config, "config: psi grid is empty");
  for (double r : rho_grid)
    if (!std::isfinite(r)) fail(ErrorKind::config, "config: rho grid has a non-finite entry");
  for (double p : psi_grid)
    if (!(p > 0.0 && p <= 1.0)) fail(ErrorKind::config, fmt::format("config: psi {} outside (0, 1]", p));
  if (samples < 1) fail(ErrorKind::config, "config: samples must be at least 1");
  if (n < 1) fail(ErrorKind::config, "config: N must be at least 1");
  if (k < 1) fail(ErrorKind::config, "config: k must be at least 1");
  if (!(eps > 0.0)) fail(ErrorKind::config, "config: eps must be positive");
  if (!(metrics.epsilon > 0.0)) fail(ErrorKind::config, "config: metrics.epsilon must be positive");
  if (metrics.n_pairs < 1) fail(ErrorKind::config, "config: metrics.n_pairs must be at least 1");
}

namespace {

std::string endpoint_name(EndpointSpace s) {
  return s == EndpointSpace::latent ? "latent" : "intermediate";
}

EndpointSpace parse_endpoint(const std::string& s) {
  if (s == "latent") return EndpointSpace::latent;
  if (s == "intermediate") return EndpointSpace::intermediate;
  fail(ErrorKind::config, "metrics.endpoint_space: expected latent or intermediate, got '" + s + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

json ExperimentConfig::to_json() const {
  json j;
  j["model"] = model.string();
  if (feature_model) j["feature_model"] = feature_model->string();
  if (pool) j["pool"] = pool->string();
  if (domain) j["domain"] = domain->to_json();
  j["N"] = n;
  j["k"] = k;
  j["eps"] = eps;
  j["sketch_rows"] = sketch_rows;
  j["seed"] = seed;
  j["rho_grid"] = rho_grid;
  j["psi_grid"] = psi_grid;
  j["samples"] = samples;
  j["metrics"] = {{"k_nn", metrics.k_nn},
                  {"j", metrics.j},
                  {"epsilon", metrics.epsilon},
                  {"n_pairs", metrics.n_pairs},
                  {"endpoint_space", endpoint_name(metrics.endpoint_space)},
                  {"split_layer", metrics.split_layer},
                  {"nn_bins", metrics.nn_bins}};
  if (reference) j["reference"] = reference->to_json();
  if (reference_biased) j["reference_biased"] = reference_biased->to_json();
  if (reference_uniform) j["reference_uniform"] = reference_uniform->to_json();
  if (!n_grid.empty()) j["n_grid"] = n_grid;
  if (!k_grid.empty()) j["k_grid"] = k_grid;
  j["rho_extreme"] = rho_extreme;
  j["modes_top"] = modes_top;
  j["out_dir"] = out_dir.string();
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) fail(ErrorKind::config, "config: top level must be an object");
    if (j.contains("model")) c.model = resolve(base_dir, j["model"].get<std::string>());
    if (j.contains("feature_model"))
      c.feature_model = resolve(base_dir, j["feature_model"].get<std::string>());
    if (j.contains("pool")) c.pool = resolve(base_dir, j["pool"].get<std::string>());
    if (j.contains("domain")) c.domain = LatentDomain::from_json(j["domain"]);
    c.n = j.value("N", c.n);
    c.k = j.value("k", c.k);
    c.eps = j.value("eps", c.eps);
    c.sketch_rows = j.value("sketch_rows", c.sketch_rows);
    c.seed = j.value("seed", c.seed);
    c.rho_grid = j.value("rho_grid", c.rho_grid);
    c.psi_grid = j.value("psi_grid", c.psi_grid);
    c.samples = j.value("samples", c.samples);
    if (j.contains("metrics")) {
      const json& m = j["metrics"];
      c.metrics.k_nn = m.value("k_nn", c.metrics.k_nn);
      c.metrics.j = m.value("j", c.metrics.j);
      c.metrics.epsilon = m.value("epsilon", c.metrics.epsilon);
      c.metrics.n_pairs = m.value("n_pairs", c.metrics.n_pairs);
      if (m.contains("endpoint_space"))
        c.metrics.endpoint_space = parse_endpoint(m["endpoint_space"].get<std::string>());
      c.metrics.split_layer = m.value("split_layer", c.metrics.split_layer);
      c.metrics.nn_bins = m.value("nn_bins", c.metrics.nn_bins);
    }
    if (j.contains("reference")) c.reference = SyntheticDataset::from_json(j["reference"]);
    if (j.contains("reference_biased"))
      c.reference_biased = SyntheticDataset::from_json(j["reference_biased"]);
    if (j.contains("reference_uniform"))
      c.reference_uniform = SyntheticDataset::from_json(j["reference_uniform"]);
    c.n_grid = j.value("n_grid", c.n_grid);
    c.k_grid = j.value("k_grid", c.k_grid);
    c.rho_extreme = j.value("rho_extreme", c.rho_extreme);
    c.modes_top = j.value("modes_top", c.modes_top);
    if (j.contains("out_dir")) c.out_dir = resolve(base_dir, j["out_dir"].get<std::string>());
  } catch (const json::exception& e) {
    fail(ErrorKind::config, fmt::format("config: {}", e.what()));
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = io::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(ErrorKind::config, fmt::format("{} line {} column {}: {}", path.string(), line, col, e.what()));
  }
  return from_json(j, path.parent_path());
}

std::string ExperimentConfig::serialize() const { return to_json().dump(2) + "\n"; }

}  // namespace polar::harness
