#include "blae/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <queue>
#include <stdexcept>

#include "blae/errors.hpp"

namespace blae {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> KnnGraph::edges() const {
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : adj[i]) {
      if (i < j) out.emplace_back(i, j, w);
    }
  }
  return out;
}

KnnGraph build_knn_graph(const Eigen::MatrixXd& points, int k) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  if (n < 2) throw std::invalid_argument("knn graph: need at least 2 points");
  if (k < 1 || static_cast<std::size_t>(k) >= n)
    throw std::invalid_argument("knn graph: k must satisfy 1 <= k < N");

  KnnGraph graph;
  graph.n = n;
  graph.k = k;
  graph.adj.assign(n, {});

  // Directed k-NN lists, ties broken by lower index.
  std::vector<std::vector<std::uint32_t>> nearest(n);
  std::vector<std::pair<double, std::uint32_t>> cand(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (points.row(static_cast<Eigen::Index>(i)) -
                        points.row(static_cast<Eigen::Index>(j)))
                           .norm();
      cand[c++] = {d, static_cast<std::uint32_t>(j)};
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    nearest[i].reserve(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) nearest[i].push_back(cand[static_cast<std::size_t>(t)].second);
  }

  // Union symmetrization.
  auto add_edge = [&](std::uint32_t a, std::uint32_t b) {
    for (const auto& [v, w] : graph.adj[a])
      if (v == b) return;
    const double d = (points.row(a) - points.row(b)).norm();
    graph.adj[a].emplace_back(b, d);
    graph.adj[b].emplace_back(a, d);
  };
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j : nearest[i]) add_edge(i, j);
  for (auto& list : graph.adj) std::sort(list.begin(), list.end());
  return graph;
}

KnnGraph build_knn_graph(const PointCloud& cloud, int k) {
  return build_knn_graph(cloud.points, k);
}

GeodesicMatrix all_pairs_geodesics(const KnnGraph& graph) {
  const std::size_t n = graph.n;
  if (n == 0) throw std::invalid_argument("all_pairs_geodesics: empty graph");

  GeodesicMatrix geo;
  geo.k = graph.k;
  geo.dist.setConstant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), kInf);

  std::vector<double> dist(n);
  using Item = std::pair<double, std::uint32_t>;
  for (std::size_t src = 0; src < n; ++src) {
    std::fill(dist.begin(), dist.end(), kInf);
    dist[src] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, static_cast<std::uint32_t>(src));
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, w] : graph.adj[u]) {
        const double nd = d + w;
        if (nd < dist[v]) {
          dist[v] = nd;
          heap.emplace(nd, v);
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j)
      geo.dist(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(j)) = dist[j];
  }

  geo.connected = geo.dist.allFinite();
  return geo;
}

double delta_min(const GeodesicMatrix& geo) {
  if (geo.size() < 2) throw std::invalid_argument("delta_min: need at least 2 points");
  if (!geo.connected) throw std::invalid_argument("delta_min: graph is disconnected");
  return delta_min_finite(geo);
}

double delta_min_finite(const GeodesicMatrix& geo) {
  double best = kInf;
  for (Eigen::Index i = 0; i < geo.size(); ++i)
    for (Eigen::Index j = i + 1; j < geo.size(); ++j) {
      const double d = geo.dist(i, j);
      if (std::isfinite(d) && d < best) best = d;
    }
  if (!std::isfinite(best)) throw std::invalid_argument("delta_min: no finite pair distance");
  return best;
}

void save_geo(const GeodesicMatrix& geo, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write("GEO1", 4);
  const std::uint64_t n = static_cast<std::uint64_t>(geo.size());
  f.write(reinterpret_cast<const char*>(&n), sizeof(n));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = geo.dist;
  f.write(reinterpret_cast<const char*>(rm.data()),
          static_cast<std::streamsize>(sizeof(double) * n * n));
  if (!f) throw DataError("write failure on " + path.string());

  nlohmann::json side{{"k", geo.k}, {"connected", geo.connected}};
  std::ofstream sf(path.string() + ".json");
  sf << side.dump(2) << "\n";
}

GeodesicMatrix load_geo(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "GEO1")
    throw DataError("bad magic in " + path.string());
  std::uint64_t n = 0;
  f.read(reinterpret_cast<char*>(&n), sizeof(n));
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  f.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * n * n));
  if (!f) throw DataError("truncated geodesic file " + path.string());
  GeodesicMatrix geo;
  geo.dist = rm;

  std::ifstream sf(path.string() + ".json");
  if (sf) {
    nlohmann::json side = nlohmann::json::parse(sf);
    geo.k = side.value("k", 0);
    geo.connected = side.value("connected", geo.dist.allFinite());
  } else {
    geo.connected = geo.dist.allFinite();
  }
  return geo;
}

}  // namespace blae
