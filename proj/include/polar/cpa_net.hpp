#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace polar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ActivationKind { identity, relu, leaky_relu };

struct Activation {
  ActivationKind kind = ActivationKind::identity;
  double alpha = 0.0;  // negative-side slope, leaky_relu only

  static Activation identity() { return {}; }
  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double alpha) { return {ActivationKind::leaky_relu, alpha}; }

  bool piecewise() const { return kind != ActivationKind::identity; }
  // Derivative on the "off" side (pre-activation <= 0).
  double off_slope() const { return kind == ActivationKind::leaky_relu ? alpha : 0.0; }

  bool operator==(const Activation&) const = default;
};

std::string_view to_string(ActivationKind kind);

struct Layer {
  Matrix weight;  // out_dim x in_dim
  Vector bias;    // out_dim
  Activation activation;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

// Sign pattern of every nonlinear unit, layer-major. Two latent points lie in
// the same linear region iff their codes compare equal.
class ActivationCode {
 public:
  ActivationCode() = default;
  explicit ActivationCode(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::uint64_t hash() const;
  std::string to_string() const;

  bool operator==(const ActivationCode&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// Exact affine piece: G(z) = slope * z + offset on the region that produced it.
struct AffineMap {
  Matrix slope;   // D x K
  Vector offset;  // D

  Vector apply(const Vector& z) const { return slope * z + offset; }
};

// Continuous piecewise-affine network R^K -> R^D. Immutable once built;
// all evaluation is const and thread-safe.
class CpaNetwork {
 public:
  // Throws ErrorKind::validation on a broken dimension chain or bad alpha.
  CpaNetwork(std::string name, std::vector<Layer> layers);

  // Single identity layer of width dim.
  static CpaNetwork identity(Eigen::Index dim, std::string name = "identity");

  const std::string& name() const { return name_; }
  const std::vector<Layer>& layers() const { return layers_; }
  Eigen::Index input_dim() const { return layers_.front().in_dim(); }
  Eigen::Index output_dim() const { return layers_.back().out_dim(); }
  std::size_t nonlinear_units() const { return nonlinear_units_; }

 private:
  std::string name_;
  std::vector<Layer> layers_;
  std::size_t nonlinear_units_ = 0;
};

Vector forward(const CpaNetwork& net, const Vector& z);
ActivationCode region_code(const CpaNetwork& net, const Vector& z);
AffineMap affine_map(const CpaNetwork& net, const Vector& z);

// Jacobian only; same masked product affine_map uses for its slope.
Matrix jacobian(const CpaNetwork& net, const Vector& z);

// Smallest |pre-activation| over nonlinear units at z (infinity when none).
double min_abs_preactivation(const CpaNetwork& net, const Vector& z);

// Network computing outer(inner(z)).
CpaNetwork compose(const CpaNetwork& inner, const CpaNetwork& outer);

// Layers [begin, end) as a standalone network.
CpaNetwork slice(const CpaNetwork& net, std::size_t begin, std::size_t end);

// Model file text. Numbers are written in shortest round-trip form, so a
// parse of the text is bit-exact.
std::string serialize(const CpaNetwork& net);
CpaNetwork parse_model(std::string_view text);

CpaNetwork load_model(const std::filesystem::path& path);
void save_model(const CpaNetwork& net, const std::filesystem::path& path);

// Hex FNV-1a of the canonical serialization.
std::string fingerprint(const CpaNetwork& net);

}  // namespace polar
