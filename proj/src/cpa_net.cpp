#include "polar/cpa_net.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include "json.hpp"

#include "polar/error.hpp"
#include "polar/io_util.hpp"
#include "polar/rng.hpp"

namespace polar {

using json = nlohmann::json;

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
  }
  return "?";
}

std::uint64_t ActivationCode::hash() const {
  const std::string_view bytes(reinterpret_cast<const char*>(bits_.data()), bits_.size());
  // Mix in the length so "" and "0"-padded codes of other nets differ.
  return fnv1a(bytes, fnv1a(std::to_string(bits_.size())));
}

std::string ActivationCode::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

CpaNetwork::CpaNetwork(std::string name, std::vector<Layer> layers)
    : name_(std::move(name)), layers_(std::move(layers)) {
  if (layers_.empty()) fail(ErrorKind::validation, "network '" + name_ + "' has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0)
      fail(ErrorKind::validation, fmt::format("layer {}: empty weight matrix", i));
    if (l.bias.size() != l.weight.rows())
      fail(ErrorKind::validation, fmt::format("layer {}: bias length {} does not match {} output units",
                                              i, l.bias.size(), l.weight.rows()));
    if (i > 0 && l.in_dim() != layers_[i - 1].out_dim())
      fail(ErrorKind::validation,
           fmt::format("layer {}: input width {} does not chain with layer {} output width {}", i,
                       l.in_dim(), i - 1, layers_[i - 1].out_dim()));
    if (l.activation.kind == ActivationKind::leaky_relu &&
        !(l.activation.alpha > 0.0 && l.activation.alpha < 1.0))
      fail(ErrorKind::validation,
           fmt::format("layer {}: leaky_relu alpha {} outside (0, 1)", i, l.activation.alpha));
    if (!l.weight.allFinite() || !l.bias.allFinite())
      fail(ErrorKind::validation, fmt::format("layer {}: non-finite parameters", i));
    if (l.activation.piecewise()) nonlinear_units_ += static_cast<std::size_t>(l.out_dim());
  }
}

CpaNetwork CpaNetwork::identity(Eigen::Index dim, std::string name) {
  if (dim <= 0) fail(ErrorKind::validation, "identity network needs a positive width");
  return CpaNetwork(std::move(name),
                    {Layer{Matrix::Identity(dim, dim), Vector::Zero(dim), Activation::identity()}});
}

namespace {

void check_input(const CpaNetwork& net, const Vector& z) {
  if (z.size() != net.input_dim())
    fail(ErrorKind::input, fmt::format("latent has {} entries, network '{}' expects {}", z.size(),
                                       net.name(), net.input_dim()));
  if (!z.allFinite()) fail(ErrorKind::input, "latent vector has non-finite entries");
}

// "on" iff strictly positive; exact zeros take the off branch.
inline bool unit_on(double pre) { return pre > 0.0; }

inline double activate(const Activation& act, double pre) {
  if (!act.piecewise() || unit_on(pre)) return pre;
  return act.off_slope() * pre;
}

}  // namespace

Vector forward(const CpaNetwork& net, const Vector& z) {
  check_input(net, z);
  Vector h = z;
  for (const Layer& l : net.layers()) {
    Vector pre = l.weight * h + l.bias;
    for (Eigen::Index i = 0; i < pre.size(); ++i) pre[i] = activate(l.activation, pre[i]);
    h = std::move(pre);
  }
  return h;
}

ActivationCode region_code(const CpaNetwork& net, const Vector& z) {
  check_input(net, z);
  std::vector<std::uint8_t> bits;
  bits.reserve(net.nonlinear_units());
  Vector h = z;
  for (const Layer& l : net.layers()) {
    Vector pre = l.weight * h + l.bias;
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      if (l.activation.piecewise()) bits.push_back(unit_on(pre[i]) ? 1 : 0);
      pre[i] = activate(l.activation, pre[i]);
    }
    h = std::move(pre);
  }
  return ActivationCode(std::move(bits));
}

Matrix jacobian(const CpaNetwork& net, const Vector& z) {
  check_input(net, z);
  Matrix slope = Matrix::Identity(net.input_dim(), net.input_dim());
  Vector h = z;
  for (const Layer& l : net.layers()) {
    Vector pre = l.weight * h + l.bias;
    Matrix next = l.weight * slope;
    if (l.activation.piecewise()) {
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        if (!unit_on(pre[i])) {
          next.row(i) *= l.activation.off_slope();
          pre[i] *= l.activation.off_slope();
        }
      }
    }
    h = std::move(pre);
    slope = std::move(next);
  }
  return slope;
}

AffineMap affine_map(const CpaNetwork& net, const Vector& z) {
  AffineMap map;
  map.slope = jacobian(net, z);
  map.offset = forward(net, z) - map.slope * z;
  return map;
}

double min_abs_preactivation(const CpaNetwork& net, const Vector& z) {
  check_input(net, z);
  double m = std::numeric_limits<double>::infinity();
  Vector h = z;
  for (const Layer& l : net.layers()) {
    Vector pre = l.weight * h + l.bias;
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      if (l.activation.piecewise()) m = std::min(m, std::abs(pre[i]));
      pre[i] = activate(l.activation, pre[i]);
    }
    h = std::move(pre);
  }
  return m;
}

CpaNetwork compose(const CpaNetwork& inner, const CpaNetwork& outer) {
  if (inner.output_dim() != outer.input_dim())
    fail(ErrorKind::composition,
         fmt::format("'{}' outputs {} values but '{}' takes {}", inner.name(), inner.output_dim(),
                     outer.name(), outer.input_dim()));
  std::vector<Layer> layers = inner.layers();
  layers.insert(layers.end(), outer.layers().begin(), outer.layers().end());
  return CpaNetwork(outer.name() + "." + inner.name(), std::move(layers));
}

CpaNetwork slice(const CpaNetwork& net, std::size_t begin, std::size_t end) {
  if (begin >= end || end > net.layers().size())
    fail(ErrorKind::input, fmt::format("layer range [{}, {}) invalid for {} layers", begin, end,
                                       net.layers().size()));
  std::vector<Layer> layers(net.layers().begin() + static_cast<std::ptrdiff_t>(begin),
                            net.layers().begin() + static_cast<std::ptrdiff_t>(end));
  return CpaNetwork(fmt::format("{}[{}:{}]", net.name(), begin, end), std::move(layers));
}

std::string serialize(const CpaNetwork& net) {
  std::string out;
  out += "{\n";
  out += "  \"name\": " + json(net.name()).dump() + ",\n";
  out += fmt::format("  \"input_dim\": {},\n", net.input_dim());
  out += "  \"layers\": [\n";
  for (std::size_t li = 0; li < net.layers().size(); ++li) {
    const Layer& l = net.layers()[li];
    out += "    {\n";
    out += fmt::format("      \"activation\": \"{}\",\n", to_string(l.activation.kind));
    if (l.activation.kind == ActivationKind::leaky_relu)
      out += "      \"alpha\": " + io::format_double(l.activation.alpha) + ",\n";
    out += "      \"weight\": [\n";
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      out += "        [";
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        if (c) out += ", ";
        out += io::format_double(l.weight(r, c));
      }
      out += r + 1 < l.weight.rows() ? "],\n" : "]\n";
    }
    out += "      ],\n";
    out += "      \"bias\": [";
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
      if (r) out += ", ";
      out += io::format_double(l.bias[r]);
    }
    out += "]\n";
    out += li + 1 < net.layers().size() ? "    },\n" : "    }\n";
  }
  out += "  ]\n}\n";
  return out;
}

namespace {

double number_at(const json& v, const std::string& field) {
  if (!v.is_number()) fail(ErrorKind::parse, field + ": expected a number");
  return v.get<double>();
}

Activation parse_activation(const json& layer, std::size_t index) {
  const std::string field = fmt::format("layers[{}].activation", index);
  if (!layer.contains("activation")) return Activation::identity();
  if (!layer["activation"].is_string()) fail(ErrorKind::parse, field + ": expected a string");
  const auto name = layer["activation"].get<std::string>();
  if (name == "identity") return Activation::identity();
  if (name == "relu") return Activation::relu();
  if (name == "leaky_relu") {
    if (!layer.contains("alpha"))
      fail(ErrorKind::parse, fmt::format("layers[{}].alpha: required for leaky_relu", index));
    return Activation::leaky_relu(number_at(layer["alpha"], fmt::format("layers[{}].alpha", index)));
  }
  fail(ErrorKind::unsupported,
       fmt::format("{}: activation '{}' is not piecewise-affine (supported: identity, relu, "
                   "leaky_relu)",
                   field, name));
}

}  // namespace

CpaNetwork parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = io::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(ErrorKind::parse, fmt::format("model text line {} column {}: {}", line, col, e.what()));
  }
  if (!doc.is_object()) fail(ErrorKind::parse, "model: top level must be an object");
  if (!doc.contains("input_dim") || !doc["input_dim"].is_number_integer() ||
      doc["input_dim"].get<long long>() <= 0)
    fail(ErrorKind::parse, "input_dim: expected a positive integer");
  const auto input_dim = doc["input_dim"].get<Eigen::Index>();
  const std::string name =
      doc.contains("name") && doc["name"].is_string() ? doc["name"].get<std::string>() : "model";
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty())
    fail(ErrorKind::parse, "layers: expected a nonempty array");

  std::vector<Layer> layers;
  Eigen::Index width = input_dim;
  for (std::size_t li = 0; li < doc["layers"].size(); ++li) {
    const json& jl = doc["layers"][li];
    if (!jl.is_object()) fail(ErrorKind::parse, fmt::format("layers[{}]: expected an object", li));
    if (!jl.contains("weight") || !jl["weight"].is_array() || jl["weight"].empty())
      fail(ErrorKind::parse, fmt::format("layers[{}].weight: expected a nonempty 2-D array", li));
    const json& jw = jl["weight"];
    const auto rows = static_cast<Eigen::Index>(jw.size());
    Matrix w(rows, width);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const json& row = jw[static_cast<std::size_t>(r)];
      if (!row.is_array())
        fail(ErrorKind::parse, fmt::format("layers[{}].weight[{}]: expected an array", li, r));
      if (static_cast<Eigen::Index>(row.size()) != width)
        fail(ErrorKind::validation,
             fmt::format("layer {}: weight row {} has {} entries, expected {} (input width)", li, r,
                         row.size(), width));
      for (Eigen::Index c = 0; c < width; ++c)
        w(r, c) = number_at(row[static_cast<std::size_t>(c)],
                            fmt::format("layers[{}].weight[{}][{}]", li, r, c));
    }
    Vector b = Vector::Zero(rows);
    if (jl.contains("bias")) {
      const json& jb = jl["bias"];
      if (!jb.is_array()) fail(ErrorKind::parse, fmt::format("layers[{}].bias: expected an array", li));
      if (static_cast<Eigen::Index>(jb.size()) != rows)
        fail(ErrorKind::validation, fmt::format("layer {}: bias has {} entries, expected {}", li,
                                                jb.size(), rows));
      for (Eigen::Index r = 0; r < rows; ++r)
        b[r] = number_at(jb[static_cast<std::size_t>(r)], fmt::format("layers[{}].bias[{}]", li, r));
    }
    layers.push_back(Layer{std::move(w), std::move(b), parse_activation(jl, li)});
    width = rows;
  }
  return CpaNetwork(name, std::move(layers));
}

CpaNetwork load_model(const std::filesystem::path& path) {
  try {
    return parse_model(io::read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void save_model(const CpaNetwork& net, const std::filesystem::path& path) {
  io::write_file(path, serialize(net));
}

std::string fingerprint(const CpaNetwork& net) {
  return fmt::format("{:016x}", fnv1a(serialize(net)));
}

}  // namespace polar
