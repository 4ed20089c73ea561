#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <numbers>
#include <optional>

#include "blae/pointcloud.hpp"

namespace blae {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct Rect {
  Interval s;
  Interval z;
  bool contains(double sv, double zv) const { return s.contains(sv) && z.contains(zv); }
};

/// Swiss Roll built on the logarithmic spiral r = e^{b*theta}, parameterized
/// by arc length s so the (s, z) -> R^3 map is isometric. Defaults follow the
/// uniform sampling rectangle [-2,10] x [0,6] with the strip
/// [1.5,6.5] x [2.5,3.5] removed.
struct SwissRollSpec {
  double b = 0.1;
  Interval s_range{-2.0, 10.0};
  Interval z_range{0.0, 6.0};
  std::optional<Rect> strip = Rect{{1.5, 6.5}, {2.5, 3.5}};
  std::size_t n_samples = 1500;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Two straight arms of equal length meeting at the origin. Points carry
/// their signed arc length from the vertex and a class label per arm.
struct VShapeSpec {
  std::size_t n_samples = 20;
  double arm_length = 1.0;
  double angle = std::numbers::pi / 3.0;  // interior angle between the arms
  double noise = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Spiral angle reaching arc length s from theta = 0. Defined for
/// b*s/sqrt(1+b^2) + 1 > 0; throws std::invalid_argument outside the domain.
double theta_of_arclength(double s, double b);

/// Inverse of theta_of_arclength: arc length of the spiral from 0 to theta.
double arclength_of_theta(double theta, double b);

/// Isometric embedding (s, z) -> (r cos(theta), r sin(theta), z).
Eigen::Vector3d swiss_roll_embed(double s, double z, double b);

/// Uniform rejection sampling over the (s, z) rectangle minus the strip.
/// Gives up after 1000 * n_samples rejected draws. `strip_rejections`, when
/// non-null, receives the number of rejected draws.
PointCloud generate_swiss_roll(const SwissRollSpec& spec,
                               std::size_t* strip_rejections = nullptr);

PointCloud generate_vshape(const VShapeSpec& spec);

/// Noise-free V-shape point at signed arc length t (for dense ground truth).
Eigen::Vector2d vshape_embed(double t, double angle);

}  // namespace blae
