#include "polar/density.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "polar/error.hpp"
#include "polar/io_util.hpp"
#include "polar/parallel.hpp"
#include "polar/rng.hpp"

namespace polar {

namespace {

struct ProbeResult {
  // Region hash -> number of cell centers in it.
  std::unordered_map<std::uint64_t, std::size_t> counts;
  // Region hashes in discovery order with a representative latent.
  std::vector<std::pair<std::uint64_t, Vector>> found;
};

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

Vector cell_point(const LatentDomain& domain, std::size_t res, std::size_t flat,
                  const Vector& offset_in_cell) {
  const auto k = static_cast<std::size_t>(domain.dim());
  Vector z(domain.dim());
  for (std::size_t d = k; d-- > 0;) {
    const std::size_t idx = flat % res;
    flat /= res;
    const auto di = static_cast<Eigen::Index>(d);
    const double w = (domain.hi()[di] - domain.lo()[di]) / static_cast<double>(res);
    z[di] = domain.lo()[di] + (static_cast<double>(idx) + offset_in_cell[di]) * w;
  }
  return z;
}

ProbeResult probe(const CpaNetwork& net, const LatentDomain& domain, std::size_t res,
                  const AtlasOptions& options) {
  const auto k = static_cast<std::size_t>(domain.dim());
  const std::size_t cells = ipow(res, k);
  const Vector center = Vector::Constant(domain.dim(), 0.5);
  std::vector<std::uint64_t> hashes(cells);
  parallel_for(cells, [&](std::size_t c) {
    hashes[c] = region_code(net, cell_point(domain, res, c, center)).hash();
  });

  ProbeResult out;
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t c = 0; c < cells; ++c) {
    ++out.counts[hashes[c]];
    if (seen.insert(hashes[c]).second)
      out.found.emplace_back(hashes[c], cell_point(domain, res, c, center));
  }

  // Jitter both cells of every axis-adjacent pair whose center codes differ,
  // to catch thin regions the centers straddle.
  std::size_t stride = 1;
  for (std::size_t axis = k; axis-- > 0;) {
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t idx = (c / stride) % res;
      if (idx + 1 >= res || hashes[c] == hashes[c + stride]) continue;
      for (std::size_t cell : {c, c + stride}) {
        Rng rng(derive_seed(options.seed, "atlas_jitter", {res, cell, axis}));
        for (std::size_t j = 0; j < options.jitter_per_cell; ++j) {
          Vector offset(domain.dim());
          for (Eigen::Index d = 0; d < offset.size(); ++d) offset[d] = rng.uniform();
          const Vector z = cell_point(domain, res, cell, offset);
          const std::uint64_t h = region_code(net, z).hash();
          if (seen.insert(h).second) out.found.emplace_back(h, z);
        }
      }
    }
    stride *= res;
  }
  return out;
}

AtlasRegion make_region(const CpaNetwork& net, const Vector& z) {
  AtlasRegion r;
  r.code = region_code(net, z);
  r.representative = z;
  r.map = affine_map(net, z);
  r.slope_pinv = pseudo_inverse(r.map.slope);
  r.spectrum = singular_values(r.map.slope);
  r.log_volume = log_volume(SpectrumTopK{r.spectrum}).value;
  r.half_log_pdet = half_log_pseudo_det(r.map.slope, &r.rank);
  return r;
}

}  // namespace

RegionAtlas enumerate_regions(const CpaNetwork& net, const LatentDomain& domain,
                              const AtlasOptions& options) {
  if (net.input_dim() > 3)
    fail(ErrorKind::scale, fmt::format("exact atlases support latent dims <= 3 (got {}); use a "
                                       "sampled pool instead",
                                       net.input_dim()));
  if (!domain.is_box()) fail(ErrorKind::domain, "region enumeration requires a uniform box domain");
  if (domain.dim() != net.input_dim())
    fail(ErrorKind::input, fmt::format("domain has {} dims, network takes {}", domain.dim(),
                                       net.input_dim()));
  if (options.resolution < 32)
    fail(ErrorKind::input, fmt::format("atlas resolution {} below the minimum of 32",
                                       options.resolution));

  const auto k = static_cast<std::size_t>(net.input_dim());
  std::size_t res = options.resolution;
  ProbeResult current = probe(net, domain, res, options);
  bool complete = false;
  while (ipow(res * 2, k) <= options.max_cells) {
    ProbeResult finer = probe(net, domain, res * 2, options);
    bool subset = true;
    std::unordered_set<std::uint64_t> known;
    for (const auto& [h, z] : current.found) known.insert(h);
    for (const auto& [h, z] : finer.found) subset = subset && known.count(h) > 0;
    // Keep any region only the coarse jitter saw.
    for (const auto& entry : current.found) {
      if (std::none_of(finer.found.begin(), finer.found.end(),
                       [&](const auto& f) { return f.first == entry.first; }))
        finer.found.push_back(entry);
    }
    current = std::move(finer);
    res *= 2;
    if (subset) {
      complete = true;
      break;
    }
  }

  RegionAtlas atlas{.net = net, .domain = domain, .regions = {}, .resolution = res,
                    .complete = complete};
  const double cells = static_cast<double>(ipow(res, k));
  for (const auto& [h, z] : current.found) {
    AtlasRegion r = make_region(net, z);
    auto it = current.counts.find(h);
    r.prior_mass = it == current.counts.end() ? 0.0 : static_cast<double>(it->second) / cells;
    atlas.regions.push_back(std::move(r));
  }
  return atlas;
}

std::ptrdiff_t find_region(const RegionAtlas& atlas, const Vector& z) {
  const ActivationCode code = region_code(atlas.net, z);
  for (std::size_t i = 0; i < atlas.regions.size(); ++i)
    if (atlas.regions[i].code == code) return static_cast<std::ptrdiff_t>(i);
  return -1;
}

double log_density_normalizer(const RegionAtlas& atlas, double rho) {
  const double log_vol = std::log(atlas.domain.volume());
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (const auto& r : atlas.regions) {
    if (r.prior_mass <= 0.0) continue;
    terms.push_back(std::log(r.prior_mass) + log_vol + rho * r.half_log_pdet);
    m = std::max(m, terms.back());
  }
  if (terms.empty()) fail(ErrorKind::state, "atlas has no region with positive prior mass");
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

double analytic_density(const RegionAtlas& atlas, const Vector& x, double rho) {
  if (!atlas.complete) fail(ErrorKind::state, "analytic density needs a complete atlas");
  if (x.size() != atlas.net.output_dim())
    fail(ErrorKind::input, fmt::format("query has {} entries, output space has {}", x.size(),
                                       atlas.net.output_dim()));
  if (!x.allFinite() || !std::isfinite(rho)) fail(ErrorKind::input, "non-finite density query");
  const double log_z = log_density_normalizer(atlas, rho);
  const double tol = 1e-8 * (1.0 + x.norm());
  double total = 0.0;
  for (const auto& r : atlas.regions) {
    if (r.prior_mass <= 0.0) continue;
    const Vector z = r.slope_pinv * (x - r.map.offset);
    if (!atlas.domain.contains(z)) continue;
    if ((r.map.slope * z + r.map.offset - x).norm() > tol) continue;
    if (!(region_code(atlas.net, z) == r.code)) continue;
    total += std::exp((rho - 1.0) * r.half_log_pdet - log_z);
  }
  return total;
}

std::vector<std::size_t> mode_regions(const RegionAtlas& atlas, double rho) {
  if (!atlas.complete) fail(ErrorKind::state, "mode ranking needs a complete atlas");
  std::vector<std::size_t> order(atlas.regions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (rho < 0.0) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return atlas.regions[a].log_volume < atlas.regions[b].log_volume;
    });
  } else if (rho > 0.0) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return atlas.regions[a].log_volume > atlas.regions[b].log_volume;
    });
  }
  return order;
}

HistogramSpec HistogramSpec::uniform(double lo, double hi, std::size_t bins) {
  return HistogramSpec{Vector::Constant(1, lo), Vector::Constant(1, hi), {bins}};
}

std::size_t HistogramSpec::total_bins() const {
  std::size_t n = 1;
  for (auto b : bins) n *= b;
  return n;
}

double HistogramSpec::bin_volume() const { return bin_width().prod(); }

Vector HistogramSpec::bin_width() const {
  Vector w(static_cast<Eigen::Index>(dim()));
  for (std::size_t d = 0; d < dim(); ++d) {
    const auto di = static_cast<Eigen::Index>(d);
    w[di] = (hi[di] - lo[di]) / static_cast<double>(bins[d]);
  }
  return w;
}

std::ptrdiff_t HistogramSpec::bin_of(const Vector& x) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < dim(); ++d) {
    const auto di = static_cast<Eigen::Index>(d);
    if (!(x[di] >= lo[di] && x[di] <= hi[di])) return -1;
    auto idx = static_cast<std::size_t>((x[di] - lo[di]) / (hi[di] - lo[di]) *
                                        static_cast<double>(bins[d]));
    if (idx >= bins[d]) idx = bins[d] - 1;
    flat = flat * bins[d] + idx;
  }
  return static_cast<std::ptrdiff_t>(flat);
}

Vector HistogramSpec::bin_lo(std::size_t flat) const {
  Vector out(static_cast<Eigen::Index>(dim()));
  for (std::size_t d = dim(); d-- > 0;) {
    const std::size_t idx = flat % bins[d];
    flat /= bins[d];
    const auto di = static_cast<Eigen::Index>(d);
    out[di] = lo[di] + (hi[di] - lo[di]) * static_cast<double>(idx) / static_cast<double>(bins[d]);
  }
  return out;
}

namespace {

void check_spec(const HistogramSpec& spec) {
  if (spec.bins.empty() || spec.lo.size() != static_cast<Eigen::Index>(spec.dim()) ||
      spec.hi.size() != spec.lo.size())
    fail(ErrorKind::input, "histogram spec dimensions disagree");
  for (std::size_t d = 0; d < spec.dim(); ++d)
    if (spec.bins[d] == 0) fail(ErrorKind::input, "histogram needs at least one bin per axis");
  if (!(spec.bin_volume() > 0.0)) fail(ErrorKind::input, "histogram bin volume must be positive");
}

}  // namespace

Histogram mc_density(const CpaNetwork& net, const std::vector<Vector>& draws,
                     const HistogramSpec& spec) {
  check_spec(spec);
  if (draws.empty()) fail(ErrorKind::input, "mc_density needs at least one draw");
  if (static_cast<Eigen::Index>(spec.dim()) != net.output_dim())
    fail(ErrorKind::input, fmt::format("histogram has {} axes, network outputs {}", spec.dim(),
                                       net.output_dim()));
  Histogram h{spec, std::vector<double>(spec.total_bins(), 0.0), 0.0};
  std::vector<std::size_t> counts(spec.total_bins(), 0);
  std::size_t outside = 0;
  for (const Vector& z : draws) {
    const auto b = spec.bin_of(forward(net, z));
    if (b < 0)
      ++outside;
    else
      ++counts[static_cast<std::size_t>(b)];
  }
  const double n = static_cast<double>(draws.size());
  for (std::size_t i = 0; i < counts.size(); ++i) h.mass[i] = static_cast<double>(counts[i]) / n;
  h.overflow = static_cast<double>(outside) / n;
  return h;
}

Histogram analytic_histogram(const RegionAtlas& atlas, double rho, const HistogramSpec& spec,
                             std::size_t subdivisions) {
  check_spec(spec);
  if (atlas.net.output_dim() != atlas.net.input_dim())
    fail(ErrorKind::unsupported, "bin masses of the analytic density need equal latent and output dims");
  if (static_cast<Eigen::Index>(spec.dim()) != atlas.net.output_dim())
    fail(ErrorKind::input, "histogram axes do not match the output dimension");
  if (subdivisions < 1) fail(ErrorKind::input, "quadrature needs at least one subdivision");
  if (!atlas.complete) fail(ErrorKind::state, "analytic density needs a complete atlas");

  const Vector width = spec.bin_width();
  const Vector sub = width / static_cast<double>(subdivisions);
  const double cell_volume = sub.prod();
  const std::size_t per_bin = ipow(subdivisions, spec.dim());
  Histogram h{spec, std::vector<double>(spec.total_bins(), 0.0), 0.0};
  parallel_for(spec.total_bins(), [&](std::size_t b) {
    const Vector corner = spec.bin_lo(b);
    double acc = 0.0;
    for (std::size_t c = 0; c < per_bin; ++c) {
      Vector x = corner;
      std::size_t flat = c;
      for (std::size_t d = spec.dim(); d-- > 0;) {
        const auto di = static_cast<Eigen::Index>(d);
        x[di] += (static_cast<double>(flat % subdivisions) + 0.5) * sub[di];
        flat /= subdivisions;
      }
      acc += analytic_density(atlas, x, rho);
    }
    h.mass[b] = acc * cell_volume;
  });
  const double inside = std::accumulate(h.mass.begin(), h.mass.end(), 0.0);
  h.overflow = std::max(0.0, 1.0 - inside);
  return h;
}

double total_variation(const Histogram& a, const Histogram& b) {
  if (a.mass.size() != b.mass.size() || a.spec.lo != b.spec.lo || a.spec.hi != b.spec.hi)
    fail(ErrorKind::input, "total variation of histograms over different bins");
  double s = std::abs(a.overflow - b.overflow);
  for (std::size_t i = 0; i < a.mass.size(); ++i) s += std::abs(a.mass[i] - b.mass[i]);
  return 0.5 * s;
}

std::string histogram_csv(const Histogram& h) {
  std::string out;
  const std::size_t dims = h.spec.dim();
  if (dims == 1) {
    out += "bin_lo,bin_hi,mass\n";
  } else {
    for (std::size_t d = 0; d < dims; ++d) out += fmt::format("bin_lo_{0},bin_hi_{0},", d);
    out += "mass\n";
  }
  const Vector width = h.spec.bin_width();
  for (std::size_t b = 0; b < h.mass.size(); ++b) {
    const Vector lo = h.spec.bin_lo(b);
    for (std::size_t d = 0; d < dims; ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      out += io::csv_double(lo[di]) + "," + io::csv_double(lo[di] + width[di]) + ",";
    }
    out += io::csv_double(h.mass[b]) + "\n";
  }
  return out;
}

std::string serialize_atlas(const RegionAtlas& atlas) {
  using json = nlohmann::json;
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json doc;
  doc["format"] = "polar-atlas";
  doc["version"] = 1;
  doc["net_fingerprint"] = fingerprint(atlas.net);
  doc["domain"] = atlas.domain.to_json();
  doc["resolution"] = atlas.resolution;
  doc["complete"] = atlas.complete;
  doc["N"] = atlas.regions.size();
  json regions = json::array();
  for (const auto& r : atlas.regions) {
    json jr;
    jr["code_hash"] = fmt::format("{:016x}", r.code_hash());
    jr["code"] = r.code.to_string();
    jr["z"] = vec(r.representative);
    std::vector<std::vector<double>> slope;
    for (Eigen::Index i = 0; i < r.map.slope.rows(); ++i) slope.push_back(vec(r.map.slope.row(i).transpose()));
    jr["slope"] = slope;
    jr["offset"] = vec(r.map.offset);
    jr["spectrum"] = r.spectrum;
    jr["log_volume"] = r.log_volume;
    jr["prior_mass"] = r.prior_mass;
    regions.push_back(std::move(jr));
  }
  doc["regions"] = std::move(regions);
  return doc.dump(2) + "\n";
}

}  // namespace polar
