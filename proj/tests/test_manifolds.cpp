#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "blae/errors.hpp"
#include "blae/manifolds.hpp"
#include "blae/rng.hpp"
#include "oracles.hpp"

using namespace blae;

TEST_CASE("theta_of_arclength at the spiral start") {
  CHECK(theta_of_arclength(0.0, 0.1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("theta_of_arclength matches the bisection oracle at s=10") {
  const double theta = theta_of_arclength(10.0, 0.1);
  // Frozen from the oracle: solve s(theta) = 10 for b = 0.1.
  CHECK(theta == doctest::Approx(6.9066269187734).epsilon(1e-12));
  CHECK(theta == doctest::Approx(oracles::bisect_theta_for_arclength(10.0, 0.1)).epsilon(1e-12));
  CHECK(std::abs(arclength_of_theta(theta, 0.1) - 10.0) <= 1e-12);
}

TEST_CASE("theta_of_arclength rejects the domain boundary") {
  const double s_bound = -std::sqrt(1.01) / 0.1;
  CHECK_THROWS_AS(theta_of_arclength(s_bound, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(theta_of_arclength(s_bound - 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(theta_of_arclength(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("arc-length round trip over a grid of valid s values") {
  const double b = 0.1;
  for (int i = 0; i < 1000; ++i) {
    const double s = -2.0 + 12.0 * static_cast<double>(i) / 999.0;
    CHECK(std::abs(arclength_of_theta(theta_of_arclength(s, b), b) - s) <= 1e-12);
  }
}

TEST_CASE("swiss roll embedding maps (0,0) to (1,0,0)") {
  const Eigen::Vector3d p = swiss_roll_embed(0.0, 0.0, 0.1);
  CHECK(p.x() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.y() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.z() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("swiss roll generation respects the removed strip") {
  SwissRollSpec spec;
  spec.n_samples = 1500;
  spec.seed = 7;
  std::size_t rejections = 0;
  const PointCloud cloud = generate_swiss_roll(spec, &rejections);
  REQUIRE(cloud.size() == 1500);
  CHECK(cloud.ambient_dim() == 3);
  CHECK(cloud.intrinsic_dim() == 2);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const double s = cloud.intrinsic(i, 0);
    const double z = cloud.intrinsic(i, 1);
    CHECK_FALSE((s >= 1.5 && s <= 6.5 && z >= 2.5 && z <= 3.5));
    CHECK(s >= -2.0);
    CHECK(s <= 10.0);
    CHECK(z >= 0.0);
    CHECK(z <= 6.0);
  }
  CHECK(rejections > 0);  // the strip has positive measure
}

TEST_CASE("swiss roll generation is bit-identical per seed") {
  SwissRollSpec spec;
  spec.n_samples = 300;
  spec.seed = 42;
  const PointCloud a = generate_swiss_roll(spec);
  const PointCloud b = generate_swiss_roll(spec);
  CHECK(a.points == b.points);
  CHECK(a.intrinsic == b.intrinsic);
  spec.seed = 43;
  const PointCloud c = generate_swiss_roll(spec);
  CHECK(a.points != c.points);
}

TEST_CASE("swiss roll embedding is isometric for nearby intrinsic points") {
  const double b = 0.1;
  // Finite-difference isometry check against the closed-form embedding.
  const Eigen::Vector3d p1 = swiss_roll_embed(3.0, 1.0, b);
  const Eigen::Vector3d p2 = swiss_roll_embed(3.0 + 1e-3, 1.0, b);
  CHECK(std::abs((p1 - p2).norm() - 1e-3) <= 1e-6);

  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const double s = rng.uniform(-1.9, 9.9);
    const double z = rng.uniform(0.0, 6.0);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ds = 1e-3 * std::cos(angle);
    const double dz = 1e-3 * std::sin(angle);
    const double ambient = (swiss_roll_embed(s, z, b) - swiss_roll_embed(s + ds, z + dz, b)).norm();
    CHECK(std::abs(ambient - 1e-3) / 1e-3 <= 1e-4);
  }
}

TEST_CASE("swiss roll rejects invalid specs") {
  SwissRollSpec spec;
  spec.n_samples = 0;
  CHECK_THROWS_AS(generate_swiss_roll(spec), ConfigError);

  SwissRollSpec bad_b;
  bad_b.b = 0.0;
  CHECK_THROWS_AS(generate_swiss_roll(bad_b), ConfigError);

  SwissRollSpec far;
  far.s_range = {-11.0, 10.0};  // below the theta(s) domain for b = 0.1
  CHECK_THROWS_AS(generate_swiss_roll(far), ConfigError);

  SwissRollSpec disjoint;
  disjoint.strip = Rect{{20.0, 30.0}, {2.5, 3.5}};
  CHECK_THROWS_AS(generate_swiss_roll(disjoint), ConfigError);
}

TEST_CASE("swiss roll rejection sampling gives up when the strip covers everything") {
  SwissRollSpec spec;
  spec.n_samples = 4;
  spec.strip = Rect{{-3.0, 11.0}, {-1.0, 7.0}};
  CHECK_THROWS_AS(generate_swiss_roll(spec), NumericError);
}

TEST_CASE("vshape arc length zero is the vertex") {
  const Eigen::Vector2d v = vshape_embed(0.0, std::numbers::pi / 3.0);
  CHECK(v.norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("noise-free vshape points lie on the two segments") {
  VShapeSpec spec;
  spec.n_samples = 20;
  spec.seed = 3;
  const PointCloud cloud = generate_vshape(spec);
  REQUIRE(cloud.size() == 20);
  REQUIRE(cloud.labels.has_value());
  const double half = spec.angle / 2.0;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const double t = cloud.intrinsic(i, 0);
    const Eigen::Vector2d expect = t >= 0.0
        ? Eigen::Vector2d(t * std::cos(half), t * std::sin(half))
        : Eigen::Vector2d(-t * std::cos(half), t * std::sin(half));
    CHECK((cloud.points.row(i).transpose() - expect).norm() <= 1e-12);
    CHECK((*cloud.labels)[static_cast<std::size_t>(i)] == (t < 0.0 ? 0 : 1));
    CHECK(std::abs(t) <= spec.arm_length);
  }
}

TEST_CASE("vshape scales to 200 samples") {
  VShapeSpec spec;
  spec.n_samples = 200;
  spec.seed = 5;
  const PointCloud cloud = generate_vshape(spec);
  CHECK(cloud.size() == 200);
  int arm_a = 0;
  for (int lab : *cloud.labels) arm_a += lab;
  CHECK(arm_a > 50);  // both arms populated
  CHECK(arm_a < 150);
}

TEST_CASE("point cloud CSV round trip") {
  VShapeSpec spec;
  spec.n_samples = 17;
  spec.noise = 0.05;
  spec.seed = 9;
  const PointCloud cloud = generate_vshape(spec);
  const auto path = std::filesystem::temp_directory_path() / "blae_test_cloud.csv";
  save_csv(cloud, path);
  const PointCloud back = load_csv(path);
  CHECK(back.points == cloud.points);
  CHECK(back.intrinsic == cloud.intrinsic);
  REQUIRE(back.labels.has_value());
  CHECK(*back.labels == *cloud.labels);
  std::filesystem::remove(path);

  SwissRollSpec sr;
  sr.n_samples = 11;
  const PointCloud roll = generate_swiss_roll(sr);
  save_csv(roll, path);
  const PointCloud roll_back = load_csv(path);
  CHECK(roll_back.points == roll.points);
  CHECK_FALSE(roll_back.labels.has_value());
  std::filesystem::remove(path);
}
