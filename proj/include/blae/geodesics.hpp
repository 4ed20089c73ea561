#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "blae/pointcloud.hpp"

namespace blae {

/// Symmetrized (union) k-nearest-neighbor graph. Edge weights are ambient
/// Euclidean distances; adjacency lists store both directions of each edge.
struct KnnGraph {
  std::size_t n = 0;
  int k = 0;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;

  /// Unique undirected edges (i < j) with weights.
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> edges() const;
};

KnnGraph build_knn_graph(const Eigen::MatrixXd& points, int k);
KnnGraph build_knn_graph(const PointCloud& cloud, int k);

/// Dense symmetric matrix of graph shortest-path lengths. Unreachable pairs
/// hold +infinity and flip `connected` to false.
struct GeodesicMatrix {
  Eigen::MatrixXd dist;
  int k = 0;
  bool connected = true;

  Eigen::Index size() const { return dist.rows(); }
};

GeodesicMatrix all_pairs_geodesics(const KnnGraph& graph);

/// Smallest off-diagonal geodesic distance. Rejects disconnected matrices.
double delta_min(const GeodesicMatrix& geo);

/// Smallest finite off-diagonal entry; usable on disconnected matrices.
double delta_min_finite(const GeodesicMatrix& geo);

/// Binary format: magic "GEO1", little-endian u64 N, then N^2 little-endian
/// f64 row-major. A JSON sidecar at <path>.json stores {k, connected}.
void save_geo(const GeodesicMatrix& geo, const std::filesystem::path& path);
GeodesicMatrix load_geo(const std::filesystem::path& path);

}  // namespace blae
