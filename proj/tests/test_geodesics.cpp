#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "blae/geodesics.hpp"
#include "blae/manifolds.hpp"
#include "blae/rng.hpp"
#include "oracles.hpp"

using namespace blae;

namespace {

Eigen::MatrixXd collinear_points() {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 1.0, 3.0;
  return pts;
}

bool has_edge(const KnnGraph& g, std::uint32_t a, std::uint32_t b, double w) {
  for (const auto& [v, weight] : g.adj[a])
    if (v == b) return std::abs(weight - w) < 1e-15;
  return false;
}

}  // namespace

TEST_CASE("knn graph on collinear points with k=1") {
  const KnnGraph g = build_knn_graph(collinear_points(), 1);
  CHECK(g.edges().size() == 2);
  CHECK(has_edge(g, 0, 1, 1.0));
  CHECK(has_edge(g, 1, 2, 2.0));
  CHECK_FALSE(has_edge(g, 0, 2, 3.0));
}

TEST_CASE("knn graph with k=N-1 is complete") {
  Rng rng(1);
  Eigen::MatrixXd pts(6, 2);
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
  const KnnGraph g = build_knn_graph(pts, 5);
  CHECK(g.edges().size() == 15);
}

TEST_CASE("duplicate points produce a zero-weight edge") {
  Eigen::MatrixXd pts(3, 2);
  pts << 0.0, 0.0, 0.0, 0.0, 5.0, 0.0;
  const KnnGraph g = build_knn_graph(pts, 1);
  CHECK(has_edge(g, 0, 1, 0.0));
}

TEST_CASE("knn graph rejects k out of range") {
  CHECK_THROWS_AS(build_knn_graph(collinear_points(), 3), std::invalid_argument);
  CHECK_THROWS_AS(build_knn_graph(collinear_points(), 0), std::invalid_argument);
}

TEST_CASE("shortest path along the collinear chain") {
  const GeodesicMatrix geo = all_pairs_geodesics(build_knn_graph(collinear_points(), 1));
  CHECK(geo.connected);
  CHECK(geo.dist(0, 2) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(geo.dist(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("complete graph distances equal Euclidean distances") {
  Rng rng(2);
  Eigen::MatrixXd pts(7, 3);
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
  const GeodesicMatrix geo = all_pairs_geodesics(build_knn_graph(pts, 6));
  for (Eigen::Index i = 0; i < 7; ++i)
    for (Eigen::Index j = 0; j < 7; ++j)
      CHECK(geo.dist(i, j) == doctest::Approx((pts.row(i) - pts.row(j)).norm()).epsilon(1e-12));
}

TEST_CASE("strip-straddling swiss roll pairs have geodesic > Euclidean") {
  SwissRollSpec spec;
  spec.n_samples = 600;
  spec.seed = 1;
  const PointCloud cloud = generate_swiss_roll(spec);
  const GeodesicMatrix geo = all_pairs_geodesics(build_knn_graph(cloud, 10));
  REQUIRE(geo.connected);

  // A pair on opposite sides of the removed strip, inside its z band.
  int a = -1, b = -1;
  for (Eigen::Index i = 0; i < cloud.size() && a < 0; ++i)
    if (cloud.intrinsic(i, 0) < 1.0 && cloud.intrinsic(i, 1) > 2.7 && cloud.intrinsic(i, 1) < 3.3)
      a = static_cast<int>(i);
  for (Eigen::Index i = 0; i < cloud.size() && b < 0; ++i)
    if (cloud.intrinsic(i, 0) > 7.0 && cloud.intrinsic(i, 1) > 2.7 && cloud.intrinsic(i, 1) < 3.3)
      b = static_cast<int>(i);
  REQUIRE(a >= 0);
  REQUIRE(b >= 0);
  const double euclid = (cloud.points.row(a) - cloud.points.row(b)).norm();
  CHECK(geo.dist(a, b) > euclid * 1.05);
}

TEST_CASE("delta_min on small instances") {
  const GeodesicMatrix chain = all_pairs_geodesics(build_knn_graph(collinear_points(), 1));
  CHECK(delta_min(chain) == doctest::Approx(1.0).epsilon(1e-15));

  Eigen::MatrixXd dup(3, 1);
  dup << 0.0, 0.0, 2.0;
  const GeodesicMatrix with_dup = all_pairs_geodesics(build_knn_graph(dup, 2));
  CHECK(delta_min(with_dup) == doctest::Approx(0.0).epsilon(1e-15));

  Eigen::MatrixXd two(2, 1);
  two << 0.0, 5.0;
  const GeodesicMatrix pair = all_pairs_geodesics(build_knn_graph(two, 1));
  CHECK(delta_min(pair) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("delta_min rejects disconnected matrices") {
  // Two far-apart dumbbells: union 1-NN graph has two components.
  Eigen::MatrixXd pts(4, 1);
  pts << 0.0, 1.0, 100.0, 101.0;
  const GeodesicMatrix geo = all_pairs_geodesics(build_knn_graph(pts, 1));
  CHECK_FALSE(geo.connected);
  CHECK(std::isinf(geo.dist(0, 2)));
  CHECK_THROWS_AS(delta_min(geo), std::invalid_argument);
  CHECK(delta_min_finite(geo) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("dijkstra matches brute-force enumeration on random small graphs") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng.uniform_int(5);  // 4..8 nodes
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
      for (Eigen::Index j = 0; j < 2; ++j) pts(i, j) = rng.uniform(-2.0, 2.0);
    const int k = 1 + static_cast<int>(rng.uniform_int(n - 1));
    const KnnGraph g = build_knn_graph(pts, k);

    std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
    for (const auto& [i, j, w] : g.edges()) edges.push_back({i, j, w});
    const Eigen::MatrixXd expect = oracles::brute_shortest_paths(n, edges);
    const GeodesicMatrix geo = all_pairs_geodesics(g);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i)
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
        if (std::isinf(expect(i, j)))
          CHECK(std::isinf(geo.dist(i, j)));
        else
          CHECK(geo.dist(i, j) == doctest::Approx(expect(i, j)).epsilon(1e-12));
      }
  }
}

TEST_CASE("adding an edge never increases a distance") {
  Rng rng(4);
  Eigen::MatrixXd pts(8, 2);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) pts(i, j) = rng.uniform(-2.0, 2.0);
  const KnnGraph sparse = build_knn_graph(pts, 2);
  const KnnGraph dense = build_knn_graph(pts, 4);  // superset of the union edges
  const GeodesicMatrix gs = all_pairs_geodesics(sparse);
  const GeodesicMatrix gd = all_pairs_geodesics(dense);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 8; ++j) CHECK(gd.dist(i, j) <= gs.dist(i, j) + 1e-12);
}

TEST_CASE("geodesic matrices are symmetric with zero diagonal") {
  Rng rng(5);
  Eigen::MatrixXd pts(20, 3);
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
  const GeodesicMatrix geo = all_pairs_geodesics(build_knn_graph(pts, 4));
  for (Eigen::Index i = 0; i < 20; ++i) {
    CHECK(geo.dist(i, i) == 0.0);
    for (Eigen::Index j = 0; j < 20; ++j) CHECK(geo.dist(i, j) == geo.dist(j, i));
  }
  // Triangle inequality on sampled triples.
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index a = static_cast<Eigen::Index>(rng.uniform_int(20));
    const Eigen::Index b = static_cast<Eigen::Index>(rng.uniform_int(20));
    const Eigen::Index c = static_cast<Eigen::Index>(rng.uniform_int(20));
    CHECK(geo.dist(a, c) <= geo.dist(a, b) + geo.dist(b, c) + 1e-12);
  }
}

TEST_CASE("GEO1 file round trip with sidecar") {
  Rng rng(6);
  Eigen::MatrixXd pts(9, 2);
  for (Eigen::Index i = 0; i < 9; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
  const GeodesicMatrix geo = all_pairs_geodesics(build_knn_graph(pts, 3));
  const auto path = std::filesystem::temp_directory_path() / "blae_test_geo.bin";
  save_geo(geo, path);
  const GeodesicMatrix back = load_geo(path);
  CHECK(back.dist == geo.dist);
  CHECK(back.k == 3);
  CHECK(back.connected == geo.connected);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}
