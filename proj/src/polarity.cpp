#include "polar/polarity.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "json.hpp"
#include "polar/error.hpp"
#include "polar/io_util.hpp"
#include "polar/parallel.hpp"
#include "polar/simd/kernels.hpp"

namespace polar {

using json = nlohmann::json;

std::size_t SamplePool::distinct_regions() const {
  std::unordered_set<std::uint64_t> codes;
  for (const auto& r : records) codes.insert(r.code_hash);
  return codes.size();
}

std::vector<double> SamplePool::log_volumes() const {
  std::vector<double> lv(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) lv[i] = records[i].log_volume;
  return lv;
}

CpaNetwork space_network(const CpaNetwork& net, const CpaNetwork* feature) {
  return feature ? compose(net, *feature) : net;
}

std::string space_label(const CpaNetwork* feature) {
  return feature ? "composed:" + fingerprint(*feature) : "output";
}

namespace {

std::optional<Matrix> pool_sketch(Eigen::Index rows, Eigen::Index out_dim, std::uint64_t seed) {
  if (rows <= 0) return std::nullopt;
  return random_semi_orthogonal(rows, out_dim, derive_seed(seed, "sketch"));
}

}  // namespace

VolumeScorer pool_scorer(const SamplePool& pool, const CpaNetwork& space_net) {
  return VolumeScorer(space_net, pool.k, pool.eps,
                      pool_sketch(pool.sketch_rows, space_net.output_dim(), pool.seed));
}

SamplePool build_pool(const CpaNetwork& net, const LatentDomain& domain, std::size_t n,
                      const PoolOptions& options) {
  if (n < 1) fail(ErrorKind::input, "pool size N must be at least 1");
  if (domain.dim() != net.input_dim())
    fail(ErrorKind::input, fmt::format("domain has {} dims, network '{}' takes {}", domain.dim(),
                                       net.name(), net.input_dim()));
  if (options.psi && domain.is_box() && *options.psi != 1.0)
    fail(ErrorKind::unsupported, "truncation baseline is defined for gaussian priors only");

  const CpaNetwork space_net = space_network(net, options.feature);
  if (options.sketch_rows > space_net.output_dim())
    fail(ErrorKind::input, fmt::format("sketch rows {} exceed output width {}", options.sketch_rows,
                                       space_net.output_dim()));
  SamplePool pool{
      .records = {},
      .domain = domain,
      .k = options.k,
      .eps = options.eps,
      .seed = options.seed,
      .space = space_label(options.feature),
      .net_fingerprint = fingerprint(net),
      .sketch_rows = options.sketch_rows,
      .psi = (options.psi && !domain.is_box()) ? options.psi : std::nullopt,
  };
  const VolumeScorer scorer = pool_scorer(pool, space_net);

  // Latents are drawn sequentially so the pool does not depend on threading.
  Rng rng(derive_seed(options.seed, "pool"));
  pool.records.resize(n);
  for (auto& r : pool.records)
    r.z = pool.psi ? truncated_draw(domain, *pool.psi, rng) : domain.sample(rng);

  parallel_for(n, [&](std::size_t i) {
    RegionRecord& r = pool.records[i];
    r.code_hash = region_code(space_net, r.z).hash();
    SpectrumTopK spectrum = scorer.spectrum(r.z);
    r.log_volume = log_volume(spectrum, pool.eps).value;
    if (options.keep_spectra) r.top_sigma = std::move(spectrum);
  });
  return pool;
}

void check_pool_matches(const SamplePool& pool, const CpaNetwork& net, const CpaNetwork* feature) {
  const std::string fp = fingerprint(net);
  if (pool.net_fingerprint != fp)
    fail(ErrorKind::config, fmt::format("pool was built for model {} but model '{}' is {}",
                                        pool.net_fingerprint, net.name(), fp));
  const std::string space = space_label(feature);
  if (pool.space != space)
    fail(ErrorKind::config,
         fmt::format("pool space '{}' does not match requested space '{}'", pool.space, space));
}

std::vector<double> polarity_weights(const std::vector<double>& log_volumes, double rho) {
  if (log_volumes.empty()) fail(ErrorKind::state, "polarity weights of an empty pool");
  if (!std::isfinite(rho)) fail(ErrorKind::input, "polarity must be finite");
  std::vector<double> w(log_volumes.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rho * log_volumes[i];
  const double m = simd::max_value(w);
  // Neumaier-compensated sum keeps the normalization exact to ~1 ulp at 2e5 entries.
  double sum = 0.0, carry = 0.0;
  for (double& x : w) {
    x = std::exp(x - m);
    const double t = sum + x;
    carry += std::abs(sum) >= x ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  sum += carry;
  for (double& x : w) x /= sum;
  return w;
}

std::vector<double> polarity_weights(const SamplePool& pool, double rho) {
  return polarity_weights(pool.log_volumes(), rho);
}

PolaritySampler::PolaritySampler(const SamplePool& pool, double rho)
    : pool_(&pool), rho_(rho), weights_(polarity_weights(pool, rho)) {
  uniform_ = rho == 0.0 || std::all_of(weights_.begin(), weights_.end(),
                                        [&](double w) { return w == weights_.front(); });
  cumulative_.resize(weights_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    acc += weights_[i];
    cumulative_[i] = acc;
  }
}

std::size_t PolaritySampler::index_for(double u) const {
  const double target = u * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  if (i >= cumulative_.size()) i = cumulative_.size() - 1;
  // Skip zero-weight entries that share a cumulative value with a neighbor.
  while (weights_[i] == 0.0 && i > 0) --i;
  return i;
}

std::vector<std::size_t> uniform_pool_indices(const SamplePool& pool, std::size_t count,
                                              std::uint64_t seed) {
  if (pool.records.empty()) fail(ErrorKind::state, "sampling from an empty pool");
  Rng rng(derive_seed(seed, "sample_batch"));
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = rng.below(pool.size());
  return out;
}

std::vector<std::size_t> sample_batch_indices(const PolaritySampler& sampler, std::size_t count,
                                              std::uint64_t seed) {
  if (count < 1) fail(ErrorKind::input, "sample count must be at least 1");
  // Equal weights (always the case at rho = 0) draw exactly like the
  // unweighted pool.
  if (sampler.uniform()) return uniform_pool_indices(sampler.pool(), count, seed);
  Rng rng(derive_seed(seed, "sample_batch"));
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = sampler.index_for(rng.uniform());
  return out;
}

std::vector<Vector> sample_batch(const PolaritySampler& sampler, std::size_t count,
                                 std::uint64_t seed) {
  const auto idx = sample_batch_indices(sampler, count, seed);
  std::vector<Vector> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(sampler.pool().records[i].z);
  return out;
}

OnlineVariant parse_online_variant(std::string_view name) {
  if (name == "paper_faithful") return OnlineVariant::paper_faithful;
  if (name == "max_normalized") return OnlineVariant::max_normalized;
  fail(ErrorKind::config, fmt::format("unknown online variant '{}'", name));
}

OnlineSampler::OnlineSampler(const SamplePool& pool, const CpaNetwork& net,
                             const CpaNetwork* feature, double rho, std::uint64_t seed,
                             OnlineVariant variant, std::uint64_t max_rejections)
    : pool_(&pool),
      space_net_(space_network(net, feature)),
      scorer_(pool_scorer(pool, space_net_)),
      rho_(rho),
      variant_(variant),
      max_rejections_(max_rejections),
      rng_(derive_seed(seed, "sample_online")) {
  if (pool.records.empty()) fail(ErrorKind::state, "online sampling needs a nonempty pool");
  if (!std::isfinite(rho)) fail(ErrorKind::input, "polarity must be finite");
  check_pool_matches(pool, net, feature);
  std::vector<double> scores = pool.log_volumes();
  for (double& s : scores) s *= rho;
  max_score_ = simd::max_value(scores);
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - max_score_);
  log_pool_sum_ = max_score_ + std::log(sum);
}

bool OnlineSampler::accept(double log_volume) {
  const double score = rho_ * log_volume;
  const double u = rng_.uniform();
  if (variant_ == OnlineVariant::max_normalized) {
    // w_z / w_max, clamped to 1 for candidates above the pool maximum.
    return u < std::exp(std::min(0.0, score - max_score_));
  }
  // w_z / (w_z + sum_i w_i) >= alpha, evaluated in log space.
  const double ratio = 1.0 / (1.0 + std::exp(log_pool_sum_ - score));
  return ratio >= u;
}

Vector OnlineSampler::next() {
  std::uint64_t rejections = 0;
  for (;;) {
    Vector z = pool_->psi ? truncated_draw(pool_->domain, *pool_->psi, rng_)
                          : pool_->domain.sample(rng_);
    ++proposals_;
    if (accept(scorer_.log_volume(z))) {
      ++accepted_;
      return z;
    }
    if (++rejections >= max_rejections_) {
      const double rate = static_cast<double>(accepted_) / static_cast<double>(proposals_);
      fail(ErrorKind::timeout,
           fmt::format("online sampler rejected {} consecutive proposals (acceptance rate "
                       "estimate {:.3g} over {} proposals)",
                       rejections, rate, proposals_));
    }
  }
}

std::vector<Vector> sample_online(const SamplePool& pool, const CpaNetwork& net,
                                  const CpaNetwork* feature, double rho, std::size_t count,
                                  std::uint64_t seed, OnlineVariant variant) {
  OnlineSampler sampler(pool, net, feature, rho, seed, variant);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.next());
  return out;
}

Vector truncated_draw(const LatentDomain& domain, double psi, Rng& rng) {
  if (domain.is_box())
    fail(ErrorKind::unsupported, "truncation baseline is defined for gaussian priors only");
  if (!(psi > 0.0 && psi <= 1.0)) fail(ErrorKind::input, fmt::format("psi {} outside (0, 1]", psi));
  const Vector half = psi * 2.0 * domain.stddev();
  Vector z(domain.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    // Per-coordinate rejection; the box is a product so this is exact.
    double v;
    do {
      v = rng.normal();
    } while (std::abs(v * domain.stddev()[i]) > half[i]);
    z[i] = domain.mean()[i] + domain.stddev()[i] * v;
  }
  return z;
}

std::vector<Vector> truncation_sample(const LatentDomain& domain, double psi, std::size_t count,
                                      std::uint64_t seed) {
  Rng rng(derive_seed(seed, "truncation"));
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(truncated_draw(domain, psi, rng));
  return out;
}

std::string serialize_pool(const SamplePool& pool) {
  json doc;
  doc["format"] = "polar-pool";
  doc["version"] = kPoolFormatVersion;
  doc["net_fingerprint"] = pool.net_fingerprint;
  doc["domain"] = pool.domain.to_json();
  doc["N"] = pool.size();
  doc["k"] = pool.k;
  doc["eps"] = pool.eps;
  doc["space"] = pool.space;
  doc["seed"] = pool.seed;
  doc["sketch_rows"] = pool.sketch_rows;
  doc["psi"] = pool.psi ? json(*pool.psi) : json(nullptr);
  json records = json::array();
  for (const auto& r : pool.records) {
    json jr;
    jr["z"] = std::vector<double>(r.z.data(), r.z.data() + r.z.size());
    jr["code_hash"] = fmt::format("{:016x}", r.code_hash);
    jr["log_volume"] = r.log_volume;
    if (r.top_sigma) jr["top_sigma"] = r.top_sigma->values;
    records.push_back(std::move(jr));
  }
  doc["records"] = std::move(records);
  return doc.dump() + "\n";
}

SamplePool parse_pool(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = io::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(ErrorKind::parse, fmt::format("pool text line {} column {}: {}", line, col, e.what()));
  }
  try {
    if (!doc.contains("version"))
      fail(ErrorKind::parse, "pool: missing mandatory 'version' field");
    if (doc["version"].get<int>() != kPoolFormatVersion)
      fail(ErrorKind::parse, fmt::format("pool: unsupported version {}", doc["version"].dump()));
    SamplePool pool{
        .records = {},
        .domain = LatentDomain::from_json(doc.at("domain")),
        .k = doc.at("k").get<std::size_t>(),
        .eps = doc.at("eps").get<double>(),
        .seed = doc.at("seed").get<std::uint64_t>(),
        .space = doc.at("space").get<std::string>(),
        .net_fingerprint = doc.at("net_fingerprint").get<std::string>(),
        .sketch_rows = doc.value("sketch_rows", Eigen::Index{0}),
        .psi = doc.contains("psi") && !doc["psi"].is_null()
                   ? std::optional<double>(doc["psi"].get<double>())
                   : std::nullopt,
    };
    const json& records = doc.at("records");
    const auto n = doc.at("N").get<std::size_t>();
    if (records.size() != n)
      fail(ErrorKind::validation, fmt::format("pool: header says N = {} but {} records follow", n,
                                              records.size()));
    pool.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const json& jr = records[i];
      const auto z = jr.at("z").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(z.size()) != pool.domain.dim())
        fail(ErrorKind::validation, fmt::format("pool record {}: latent has {} entries, domain {}",
                                                i, z.size(), pool.domain.dim()));
      RegionRecord r;
      r.z = Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
      r.code_hash = std::stoull(jr.at("code_hash").get<std::string>(), nullptr, 16);
      r.log_volume = jr.at("log_volume").get<double>();
      if (!std::isfinite(r.log_volume))
        fail(ErrorKind::validation, fmt::format("pool record {}: non-finite log_volume", i));
      if (jr.contains("top_sigma"))
        r.top_sigma = SpectrumTopK{jr["top_sigma"].get<std::vector<double>>()};
      pool.records.push_back(std::move(r));
    }
    return pool;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, fmt::format("pool: {}", e.what()));
  }
}

void save_pool(const SamplePool& pool, const std::filesystem::path& path) {
  io::write_file(path, serialize_pool(pool));
}

SamplePool load_pool(const std::filesystem::path& path) {
  try {
    return parse_pool(io::read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace polar
