#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "polar/cpa_net.hpp"
#include "polar/rng.hpp"

namespace polar {

// Latent prior: a uniform box or an axis-aligned Gaussian.
class LatentDomain {
 public:
  enum class Kind { uniform_box, gaussian };

  static LatentDomain uniform_box(Vector lo, Vector hi);
  static LatentDomain uniform_box(Eigen::Index dim, double lo, double hi);
  static LatentDomain gaussian(Vector mean, Vector stddev);
  static LatentDomain gaussian(Eigen::Index dim, double mean, double stddev);

  // "uniform:LO:HI" or "gaussian:MEAN:STD", broadcast to dim.
  static LatentDomain parse(std::string_view spec, Eigen::Index dim);

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return first_.size(); }
  bool is_box() const { return kind_ == Kind::uniform_box; }

  // Box bounds, or mean and stddev for the Gaussian.
  const Vector& lo() const { return first_; }
  const Vector& hi() const { return second_; }
  const Vector& mean() const { return first_; }
  const Vector& stddev() const { return second_; }

  Vector sample(Rng& rng) const;
  // Box membership (closed box); always true for Gaussians.
  bool contains(const Vector& z) const;
  // Lebesgue volume of the box; ErrorKind::domain for Gaussians.
  double volume() const;

  nlohmann::json to_json() const;
  static LatentDomain from_json(const nlohmann::json& j);

  bool operator==(const LatentDomain& other) const;

 private:
  LatentDomain(Kind kind, Vector first, Vector second);

  Kind kind_;
  Vector first_;
  Vector second_;
};

}  // namespace polar
