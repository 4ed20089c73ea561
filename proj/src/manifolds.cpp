#include "blae/manifolds.hpp"

#include <cmath>
#include <string>

#include "blae/errors.hpp"
#include "blae/rng.hpp"

namespace blae {

void SwissRollSpec::validate() const {
  if (b == 0.0) throw ConfigError("swiss roll: b must be nonzero");
  if (n_samples < 2) throw ConfigError("swiss roll: n_samples must be at least 2");
  if (s_range.hi <= s_range.lo || z_range.hi <= z_range.lo)
    throw ConfigError("swiss roll: empty sampling rectangle");
  // theta(s) is defined for b*s/sqrt(1+b^2) + 1 > 0.
  const double s_bound = -std::sqrt(1.0 + b * b) / b;
  const bool out_of_domain = b > 0.0 ? s_range.lo <= s_bound : s_range.hi >= s_bound;
  if (out_of_domain)
    throw ConfigError("swiss roll: s_range extends past the spiral domain boundary " +
                      std::to_string(s_bound));
  if (strip) {
    const bool overlaps = strip->s.lo < s_range.hi && strip->s.hi > s_range.lo &&
                          strip->z.lo < z_range.hi && strip->z.hi > z_range.lo;
    if (!overlaps)
      throw ConfigError("swiss roll: strip does not intersect the sampling rectangle");
  }
}

void VShapeSpec::validate() const {
  if (n_samples < 2) throw ConfigError("vshape: n_samples must be at least 2");
  if (arm_length <= 0.0) throw ConfigError("vshape: arm_length must be positive");
  if (!(angle > 0.0 && angle < std::numbers::pi))
    throw ConfigError("vshape: angle must lie in (0, pi)");
  if (noise < 0.0) throw ConfigError("vshape: noise must be nonnegative");
}

double theta_of_arclength(double s, double b) {
  if (b == 0.0) throw std::invalid_argument("theta_of_arclength: b must be nonzero");
  const double arg = b * s / std::sqrt(1.0 + b * b) + 1.0;
  if (arg <= 0.0)
    throw std::invalid_argument("theta_of_arclength: s = " + std::to_string(s) +
                                " is outside the spiral domain");
  return std::log(arg) / b;
}

double arclength_of_theta(double theta, double b) {
  return std::sqrt(1.0 + b * b) / b * (std::exp(b * theta) - 1.0);
}

Eigen::Vector3d swiss_roll_embed(double s, double z, double b) {
  const double theta = theta_of_arclength(s, b);
  const double r = std::exp(b * theta);
  return {r * std::cos(theta), r * std::sin(theta), z};
}

PointCloud generate_swiss_roll(const SwissRollSpec& spec, std::size_t* strip_rejections) {
  spec.validate();
  Rng rng = Rng(spec.seed).derive("swiss_roll");

  const std::size_t n = spec.n_samples;
  const std::size_t max_attempts = 1000 * n;

  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(n), 3);
  cloud.intrinsic.resize(static_cast<Eigen::Index>(n), 2);
  cloud.seed = spec.seed;

  std::size_t accepted = 0;
  std::size_t rejected = 0;
  while (accepted < n) {
    if (rejected >= max_attempts)
      throw NumericError("swiss roll: rejection sampling exhausted " +
                         std::to_string(max_attempts) + " attempts");
    const double s = rng.uniform(spec.s_range.lo, spec.s_range.hi);
    const double z = rng.uniform(spec.z_range.lo, spec.z_range.hi);
    if (spec.strip && spec.strip->contains(s, z)) {
      ++rejected;
      continue;
    }
    const Eigen::Index i = static_cast<Eigen::Index>(accepted);
    cloud.points.row(i) = swiss_roll_embed(s, z, spec.b).transpose();
    cloud.intrinsic(i, 0) = s;
    cloud.intrinsic(i, 1) = z;
    ++accepted;
  }
  if (strip_rejections) *strip_rejections = rejected;
  cloud.validate();
  return cloud;
}

Eigen::Vector2d vshape_embed(double t, double angle) {
  const double half = angle / 2.0;
  const Eigen::Vector2d dir_a(std::cos(half), std::sin(half));
  const Eigen::Vector2d dir_b(std::cos(half), -std::sin(half));
  return t >= 0.0 ? Eigen::Vector2d(t * dir_a) : Eigen::Vector2d(-t * dir_b);
}

PointCloud generate_vshape(const VShapeSpec& spec) {
  spec.validate();
  Rng rng = Rng(spec.seed).derive("vshape");

  const std::size_t n = spec.n_samples;
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(n), 2);
  cloud.intrinsic.resize(static_cast<Eigen::Index>(n), 1);
  cloud.labels = std::vector<int>(n, 0);
  cloud.seed = spec.seed;

  for (std::size_t i = 0; i < n; ++i) {
    const double t = rng.uniform(-spec.arm_length, spec.arm_length);
    Eigen::Vector2d p = vshape_embed(t, spec.angle);
    if (spec.noise > 0.0) {
      p.x() += spec.noise * rng.normal();
      p.y() += spec.noise * rng.normal();
    }
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    cloud.points.row(row) = p.transpose();
    cloud.intrinsic(row, 0) = t;
    (*cloud.labels)[i] = t < 0.0 ? 0 : 1;
  }
  cloud.validate();
  return cloud;
}

}  // namespace blae
