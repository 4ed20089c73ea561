#include <doctest.h>

#include <cmath>

#include "blae/manifolds.hpp"
#include "blae/metrics.hpp"
#include "blae/rng.hpp"

using namespace blae;

namespace {

GeodesicMatrix geo_of(const Eigen::MatrixXd& dist) {
  GeodesicMatrix geo;
  geo.dist = dist;
  geo.connected = dist.allFinite();
  return geo;
}

Eigen::MatrixXd euclid_1d(const std::vector<double>& xs) {
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      d(i, j) = std::abs(xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)]);
  return d;
}

Eigen::MatrixXd random_dist(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = rng.uniform(0.1, 5.0);
      d(j, i) = d(i, j);
    }
  return d;
}

}  // namespace

TEST_CASE("knn recall of a matrix against itself is one") {
  Rng rng(1);
  const GeodesicMatrix geo = geo_of(random_dist(rng, 12));
  const RecallResult r = knn_recall(geo, geo, {1, 3, 5});
  CHECK(r.mean == doctest::Approx(1.0).epsilon(1e-15));
  for (const auto& [k, v] : r.per_k) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("crafted 6-point instance with disjoint neighborhoods scores zero") {
  const Eigen::MatrixXd data = euclid_1d({0.0, 1.0, 3.0, 6.0, 10.0, 15.0});
  const Eigen::MatrixXd latent = euclid_1d({0.0, 100.0, 1.0, 101.0, 2.0, 102.0});
  const RecallResult r = knn_recall(geo_of(data), geo_of(latent), {1});
  CHECK(r.mean == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("knn recall is invariant to strictly monotone distance transforms") {
  Rng rng(2);
  const Eigen::MatrixXd data = random_dist(rng, 15);
  const Eigen::MatrixXd latent = random_dist(rng, 15);
  const RecallResult base = knn_recall(geo_of(data), geo_of(latent), {2, 4});
  const Eigen::MatrixXd warped = latent.array().sqrt().matrix();
  const RecallResult after = knn_recall(geo_of(data), geo_of(warped), {2, 4});
  CHECK(base.mean == doctest::Approx(after.mean).epsilon(1e-15));
}

TEST_CASE("knn recall rejects oversized k") {
  Rng rng(3);
  const GeodesicMatrix geo = geo_of(random_dist(rng, 6));
  CHECK_THROWS_AS(knn_recall(geo, geo, {6}), std::invalid_argument);
}

TEST_CASE("kl_sigma of identical matrices is zero") {
  Rng rng(4);
  const GeodesicMatrix geo = geo_of(random_dist(rng, 9));
  CHECK(kl_sigma(geo, geo, 0.1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("kl_sigma matches a hand evaluation on a 3-point instance") {
  Eigen::MatrixXd data(3, 3), latent(3, 3);
  data << 0.0, 1.0, 2.0, 1.0, 0.0, 1.5, 2.0, 1.5, 0.0;
  latent << 0.0, 0.5, 2.5, 0.5, 0.0, 1.0, 2.5, 1.0, 0.0;
  const double sigma = 1.0;

  // Direct scalar arithmetic of the density formula, self term included.
  auto density = [&](const Eigen::MatrixXd& m) {
    const double dmax = m.maxCoeff();
    std::array<double, 3> f{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double r = m(i, j) / dmax;
        f[static_cast<std::size_t>(i)] += std::exp(-r * r / sigma);
      }
    const double total = f[0] + f[1] + f[2];
    return std::array<double, 3>{f[0] / total, f[1] / total, f[2] / total};
  };
  const auto p = density(data);
  const auto q = density(latent);
  double expect = 0.0;
  for (int i = 0; i < 3; ++i)
    expect += p[static_cast<std::size_t>(i)] *
              std::log(p[static_cast<std::size_t>(i)] / q[static_cast<std::size_t>(i)]);

  const double got = kl_sigma(geo_of(data), geo_of(latent), sigma);
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  CHECK(got == doctest::Approx(0.0008537765258287515).epsilon(1e-10));  // frozen oracle value
}

TEST_CASE("kl_sigma is nonnegative on random matrix pairs") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.uniform_int(6));
    const double sigma = rng.uniform(0.01, 2.0);
    const double kl = kl_sigma(geo_of(random_dist(rng, n)), geo_of(random_dist(rng, n)), sigma);
    CHECK(kl >= -1e-14);
  }
}

TEST_CASE("kl_sigma rejects degenerate inputs") {
  const GeodesicMatrix zero = geo_of(Eigen::MatrixXd::Zero(3, 3));
  CHECK_THROWS_AS(kl_sigma(zero, zero, 0.1), std::invalid_argument);
  Rng rng(6);
  const GeodesicMatrix ok = geo_of(random_dist(rng, 3));
  CHECK_THROWS_AS(kl_sigma(ok, ok, 0.0), std::invalid_argument);
}

TEST_CASE("recon mse examples") {
  Mlp id2;
  id2.layers.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                        Activation::Identity});
  PointCloud cloud;
  cloud.points.resize(4, 2);
  cloud.points << 1, 0, 0, 1, -1, 0, 0, -1;
  cloud.intrinsic = cloud.points;
  CHECK(recon_mse(cloud, id2, id2) == doctest::Approx(0.0).epsilon(1e-15));

  // Constant-zero decoder on unit-norm points in R^3: per-coordinate MSE 1/3.
  Mlp id3, zero3;
  id3.layers.push_back({Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3),
                        Activation::Identity});
  zero3.layers.push_back({Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3),
                          Activation::Identity});
  PointCloud sphere;
  sphere.points.resize(3, 3);
  sphere.points << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  sphere.intrinsic = sphere.points;
  CHECK(recon_mse(sphere, id3, zero3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("verify_bilip on identity and scaled embeddings") {
  PointCloud segment;
  segment.points.resize(8, 2);
  for (int i = 0; i < 8; ++i) {
    segment.points(i, 0) = static_cast<double>(i);
    segment.points(i, 1) = 0.0;
  }
  segment.intrinsic = segment.points.col(0);
  const KnnGraph graph = build_knn_graph(segment.points, 2);

  Mlp id2;
  id2.layers.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                        Activation::Identity});
  const BilipCheck ok = verify_bilip(id2, segment, graph, 1.0);
  CHECK(ok.fraction_within == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ok.worst.empty());
  CHECK(ok.ratio_bounds.first == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ok.ratio_bounds.second == doctest::Approx(1.0).epsilon(1e-12));

  Mlp tripled;
  tripled.layers.push_back({3.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                            Activation::Identity});
  const BilipCheck bad = verify_bilip(tripled, segment, graph, 2.0);
  CHECK(bad.fraction_within == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_FALSE(bad.worst.empty());
  CHECK(bad.worst.front().ratio == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("verify_bilip is invariant to relabeling the points") {
  Rng rng(7);
  PointCloud cloud;
  cloud.points.resize(12, 2);
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) cloud.points(i, j) = rng.uniform(-2.0, 2.0);
  cloud.intrinsic = cloud.points;
  Mlp enc = make_mlp({2, 6, 2}, Activation::Elu, rng);

  const BilipCheck a = verify_bilip(enc, cloud, build_knn_graph(cloud.points, 3), 1.5);

  std::vector<Eigen::Index> perm = {7, 2, 11, 0, 5, 9, 1, 10, 3, 8, 4, 6};
  PointCloud shuffled;
  shuffled.points.resize(12, 2);
  for (Eigen::Index i = 0; i < 12; ++i) shuffled.points.row(i) = cloud.points.row(perm[i]);
  shuffled.intrinsic = shuffled.points;
  const BilipCheck b = verify_bilip(enc, shuffled, build_knn_graph(shuffled.points, 3), 1.5);
  CHECK(a.fraction_within == doctest::Approx(b.fraction_within).epsilon(1e-15));
}

TEST_CASE("rank table on hand-built reports") {
  auto report = [](double knn, double kl, double mse) {
    EvalReport r;
    r.knn_recall = knn;
    r.kl[0.1] = kl;
    r.mse = mse;
    return r;
  };

  std::map<std::string, std::vector<EvalReport>> single{{"only", {report(0.9, 0.1, 0.01)}}};
  const RankTable solo = rank_table(single);
  for (const auto& row : solo.rows) CHECK(row[0].mean == doctest::Approx(1.0).epsilon(1e-15));

  std::map<std::string, std::vector<EvalReport>> two{
      {"strong", {report(0.9, 0.1, 0.01), report(0.95, 0.05, 0.02)}},
      {"weak", {report(0.5, 0.4, 0.10), report(0.52, 0.60, 0.30)}}};
  const RankTable pair = rank_table(two);
  REQUIRE(pair.methods.size() == 2);
  const std::size_t strong = pair.methods[0] == "strong" ? 0 : 1;
  const std::size_t weak = 1 - strong;
  for (const auto& row : pair.rows) {
    CHECK(row[strong].mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(row[weak].mean == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(row[strong].stddev == doctest::Approx(0.0).epsilon(1e-15));
  }

  // Three methods over two datasets; hand-computed rank means for knn:
  // dataset 1 ranks: a=1, b=2, c=3; dataset 2 ranks: a=2, b=1, c=3.
  std::map<std::string, std::vector<EvalReport>> three{
      {"a", {report(0.9, 0.1, 0.01), report(0.7, 0.1, 0.01)}},
      {"b", {report(0.8, 0.2, 0.02), report(0.8, 0.2, 0.02)}},
      {"c", {report(0.5, 0.3, 0.03), report(0.5, 0.3, 0.03)}}};
  const RankTable t3 = rank_table(three);
  REQUIRE(t3.measures[0] == "knn");
  const auto idx_of = [&](const std::string& m) {
    for (std::size_t i = 0; i < t3.methods.size(); ++i)
      if (t3.methods[i] == m) return i;
    return std::size_t{99};
  };
  CHECK(t3.rows[0][idx_of("a")].mean == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(t3.rows[0][idx_of("b")].mean == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(t3.rows[0][idx_of("c")].mean == doctest::Approx(3.0).epsilon(1e-15));

  std::map<std::string, std::vector<EvalReport>> ragged{
      {"a", {report(0.9, 0.1, 0.01)}},
      {"b", {report(0.8, 0.2, 0.02), report(0.8, 0.2, 0.02)}}};
  CHECK_THROWS_AS(rank_table(ragged), std::invalid_argument);
}

TEST_CASE("spearman correlation on monotone and reversed series") {
  const std::vector<double> xs = {0.1, 0.5, 0.9, 1.7, 2.0};
  const std::vector<double> up = {1.0, 2.0, 30.0, 31.0, 100.0};
  std::vector<double> down(up.rbegin(), up.rend());
  CHECK(spearman(xs, up) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spearman(xs, down) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("orthogonal alignment undoes rotation, reflection and translation") {
  Rng rng(8);
  Eigen::MatrixXd pts(40, 2);
  for (Eigen::Index i = 0; i < 40; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) pts(i, j) = rng.uniform(-3.0, 3.0);

  const double angle = 0.83;
  Eigen::Matrix2d rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Eigen::Matrix2d reflect;
  reflect << 1.0, 0.0, 0.0, -1.0;

  Eigen::MatrixXd moved = (pts * rot.transpose()).rowwise() + Eigen::RowVector2d(3.0, -1.5);
  CHECK((align_orthogonal(moved, pts) - pts).cwiseAbs().maxCoeff() <= 1e-9);

  Eigen::MatrixXd mirrored = (pts * (rot * reflect).transpose()).rowwise() +
                             Eigen::RowVector2d(-2.0, 0.5);
  CHECK((align_orthogonal(mirrored, pts) - pts).cwiseAbs().maxCoeff() <= 1e-9);

  CHECK(embedding_diameter(pts) > 0.0);
}
