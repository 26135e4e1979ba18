#include "polar/domain.hpp"

#include <fmt/format.h>

#include <charconv>
#include <vector>

#include "polar/error.hpp"

namespace polar {

LatentDomain::LatentDomain(Kind kind, Vector first, Vector second)
    : kind_(kind), first_(std::move(first)), second_(std::move(second)) {
  if (first_.size() == 0 || first_.size() != second_.size())
    fail(ErrorKind::domain, "domain bounds must be nonempty and of equal length");
  if (!first_.allFinite() || !second_.allFinite())
    fail(ErrorKind::domain, "domain parameters must be finite");
  for (Eigen::Index i = 0; i < first_.size(); ++i) {
    if (kind_ == Kind::uniform_box && !(first_[i] < second_[i]))
      fail(ErrorKind::domain, fmt::format("box dimension {}: lo {} is not below hi {}", i,
                                          first_[i], second_[i]));
    if (kind_ == Kind::gaussian && !(second_[i] > 0.0))
      fail(ErrorKind::domain, fmt::format("gaussian dimension {}: std {} must be positive", i,
                                          second_[i]));
  }
}

LatentDomain LatentDomain::uniform_box(Vector lo, Vector hi) {
  return LatentDomain(Kind::uniform_box, std::move(lo), std::move(hi));
}

LatentDomain LatentDomain::uniform_box(Eigen::Index dim, double lo, double hi) {
  return uniform_box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

LatentDomain LatentDomain::gaussian(Vector mean, Vector stddev) {
  return LatentDomain(Kind::gaussian, std::move(mean), std::move(stddev));
}

LatentDomain LatentDomain::gaussian(Eigen::Index dim, double mean, double stddev) {
  return gaussian(Vector::Constant(dim, mean), Vector::Constant(dim, stddev));
}

LatentDomain LatentDomain::parse(std::string_view spec, Eigen::Index dim) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= spec.size(); ++i) {
    if (i == spec.size() || spec[i] == ':') {
      parts.push_back(spec.substr(start, i - start));
      start = i + 1;
    }
  }
  auto number = [&](std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      fail(ErrorKind::config, fmt::format("domain '{}': '{}' is not a number", spec, s));
    return v;
  };
  if (parts.size() != 3)
    fail(ErrorKind::config,
         fmt::format("domain '{}': expected uniform:LO:HI or gaussian:MEAN:STD", spec));
  if (parts[0] == "uniform") return uniform_box(dim, number(parts[1]), number(parts[2]));
  if (parts[0] == "gaussian") return gaussian(dim, number(parts[1]), number(parts[2]));
  fail(ErrorKind::config, fmt::format("domain '{}': unknown kind '{}'", spec, parts[0]));
}

Vector LatentDomain::sample(Rng& rng) const {
  Vector z(dim());
  if (kind_ == Kind::uniform_box) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.uniform(first_[i], second_[i]);
  } else {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = first_[i] + second_[i] * rng.normal();
  }
  return z;
}

bool LatentDomain::contains(const Vector& z) const {
  if (z.size() != dim()) return false;
  if (kind_ == Kind::gaussian) return true;
  return ((z.array() >= first_.array()) && (z.array() <= second_.array())).all();
}

double LatentDomain::volume() const {
  if (kind_ != Kind::uniform_box) fail(ErrorKind::domain, "volume is defined for box domains only");
  return (second_ - first_).prod();
}

nlohmann::json LatentDomain::to_json() const {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  if (kind_ == Kind::uniform_box)
    return {{"kind", "uniform_box"}, {"lo", vec(first_)}, {"hi", vec(second_)}};
  return {{"kind", "gaussian"}, {"mean", vec(first_)}, {"std", vec(second_)}};
}

LatentDomain LatentDomain::from_json(const nlohmann::json& j) {
  auto vec = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array())
      fail(ErrorKind::config, fmt::format("domain.{}: expected an array", key));
    const auto v = j[key].get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    fail(ErrorKind::config, "domain: expected an object with a 'kind'");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "uniform_box") return uniform_box(vec("lo"), vec("hi"));
  if (kind == "gaussian") return gaussian(vec("mean"), vec("std"));
  fail(ErrorKind::config, "domain.kind: unknown kind '" + kind + "'");
}

bool LatentDomain::operator==(const LatentDomain& other) const {
  return kind_ == other.kind_ && first_ == other.first_ && second_ == other.second_;
}

}  // namespace polar
