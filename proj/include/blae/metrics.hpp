#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "blae/geodesics.hpp"
#include "blae/nn.hpp"
#include "blae/pointcloud.hpp"

namespace blae {

struct EvalReport {
  double knn_recall = 0.0;
  std::map<int, double> per_k_recall;
  std::map<double, double> kl;
  double mse = 0.0;
  std::pair<double, double> bilip_ratio_bounds{0.0, 0.0};
};

std::string eval_report_json(const EvalReport& report);

struct RecallResult {
  std::map<int, double> per_k;
  double mean = 0.0;
};

/// Fraction of each point's k nearest data-manifold neighbors that stay
/// among its k nearest latent neighbors, averaged over points, per k and
/// averaged over ks. Ties break toward the lower index.
RecallResult knn_recall(const GeodesicMatrix& geo_data, const GeodesicMatrix& geo_latent,
                        const std::vector<int>& ks);

/// KL divergence between kernel density estimates built from the two
/// distance matrices, each normalized by its own maximum entry. The j = i
/// self term is included.
double kl_sigma(const GeodesicMatrix& geo_data, const GeodesicMatrix& geo_latent, double sigma);

/// Reporting MSE: squared residual averaged over points and coordinates.
double recon_mse(const PointCloud& cloud, const Mlp& encoder, const Mlp& decoder);

struct BilipViolation {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double ratio = 0.0;
};

struct BilipCheck {
  double fraction_within = 0.0;
  std::pair<double, double> ratio_bounds{0.0, 0.0};
  std::vector<BilipViolation> worst;  // up to 10, most violating first
};

/// Empirical bi-Lipschitz check over local pairs (the k-NN graph edges,
/// where graph distance equals ambient distance): fraction of edges whose
/// latent/ambient distance ratio lies within [1/kappa - tol, kappa + tol].
BilipCheck verify_bilip(const Mlp& encoder, const PointCloud& cloud, const KnnGraph& graph,
                        double kappa, double tol = 0.05);

struct RankCell {
  double mean = 0.0;
  double stddev = 0.0;
};

struct RankTable {
  std::vector<std::string> methods;
  std::vector<std::string> measures;
  // rows[measure_index][method_index]
  std::vector<std::vector<RankCell>> rows;

  std::string to_csv() const;
};

/// Per-dataset ranks (1 = best; higher recall ranks first, lower KL/MSE rank
/// first; ties share the average rank), averaged across datasets. Every
/// method must supply the same number of reports.
RankTable rank_table(const std::map<std::string, std::vector<EvalReport>>& reports);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// Largest pairwise Euclidean distance among rows.
double embedding_diameter(const Eigen::MatrixXd& points);

/// Best orthogonal transform + translation (reflections allowed) mapping
/// src rows onto dst rows; returns the transformed src.
Eigen::MatrixXd align_orthogonal(const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst);

}  // namespace blae
