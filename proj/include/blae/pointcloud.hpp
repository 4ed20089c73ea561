#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace blae {

/// Sampled manifold points with their ground-truth intrinsic coordinates.
/// `points` is N x m (ambient), `intrinsic` is N x k (e.g. (s, z) for the
/// Swiss Roll, signed arc length for the V-shape). Labels are optional
/// integer classes, one per point.
struct PointCloud {
  Eigen::MatrixXd points;
  Eigen::MatrixXd intrinsic;
  std::optional<std::vector<int>> labels;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index ambient_dim() const { return points.cols(); }
  Eigen::Index intrinsic_dim() const { return intrinsic.cols(); }

  /// Throws if the invariants do not hold (N >= 2, finite rows, matching
  /// label count).
  void validate() const;
};

/// CSV layout: header `x0..x{m-1},u0..u{k-1},label`, one row per point.
/// Doubles are written in shortest round-trip form; the label field is left
/// empty when the cloud carries no labels.
void save_csv(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud load_csv(const std::filesystem::path& path);

}  // namespace blae
