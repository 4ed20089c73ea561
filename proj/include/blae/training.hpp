#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "blae/geodesics.hpp"
#include "blae/losses.hpp"
#include "blae/nn.hpp"
#include "blae/pointcloud.hpp"

namespace blae {

/// One training run: Adam with classical L2 weight decay and a stepwise
/// learning-rate schedule lr * lr_decay^floor(epoch / lr_step).
struct TrainConfig {
  int epochs = 3000;
  int batch_size = 500;
  double lr = 2e-3;
  double lr_decay = 0.1;
  int lr_step = 1000;
  double weight_decay = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  LossConfig loss;
  std::vector<int> arch = {3, 256, 256, 2};  // encoder widths; decoder mirrors
  Activation activation = Activation::Elu;

  void validate(Eigen::Index n_samples) const;
};

struct StepRecord {
  long step = 0;
  LossBreakdown loss;
};

struct RunArtifacts {
  Mlp encoder;
  Mlp decoder;
  Mlp encoder_init;  // state before the first step, for landscape snapshots
  Mlp decoder_init;
  std::vector<StepRecord> curve;
  Eigen::MatrixXd embedding;  // N x latent_dim
  double resolved_delta = 0.0;
  double wall_seconds = 0.0;
  bool failed = false;  // aborted on non-finite loss; models hold the last good state
  std::string failure_reason;

  const LossBreakdown& final_loss() const { return curve.back().loss; }
};

/// Effective learning rate at a given (0-based) epoch.
double scheduled_lr(const TrainConfig& cfg, int epoch);

RunArtifacts train(const PointCloud& cloud, const GeodesicMatrix& geo, const TrainConfig& cfg);

/// Encoder outputs for every point of the cloud.
Eigen::MatrixXd embed_cloud(const Mlp& encoder, const PointCloud& cloud);

/// Exposed for the single-step oracle test.
struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long t = 0;

  explicit AdamState(Eigen::Index n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& state,
               double lr, double beta1, double beta2, double eps, double weight_decay);

struct KappaTrial {
  double kappa = 0.0;
  double residual = 0.0;
  bool accepted = false;
};

struct KappaSearchResult {
  double chosen = 0.0;  // smallest accepted kappa, or the largest tried on failure
  bool accepted = false;
  std::vector<KappaTrial> trials;
};

/// Midpoint bisection over [lo, hi]: a trial trains at kappa and accepts when
/// the post-training spectral residual on the full set stays below tol. A
/// degenerate interval runs a single trial at lo.
KappaSearchResult kappa_search(const PointCloud& cloud, const GeodesicMatrix& geo,
                               const TrainConfig& base_cfg, double lo, double hi,
                               double tol = 1e-4, int budget = 5);

/// Losses on the affine parameter plane through three snapshots:
/// theta(a, b) = theta0 + a (theta1 - theta0) + b (theta2 - theta0).
struct LandscapeScan {
  std::vector<double> coords;  // shared grid coordinates for both axes
  Eigen::MatrixXd recon;       // recon[i][j] at (a = coords[i], b = coords[j])
  Eigen::MatrixXd recon_reg;   // recon + lambda_reg * (inj + alpha * nonexp)
};

struct LandscapePoint {
  double recon = 0.0;
  double recon_reg = 0.0;
};

LandscapePoint landscape_point(const PointCloud& cloud, const GeodesicMatrix& geo,
                               const TrainConfig& cfg, const Eigen::VectorXd& theta0,
                               const Eigen::VectorXd& theta1, const Eigen::VectorXd& theta2,
                               double a, double b);

/// Uniform grid over [-0.25, 1.25]^2; grid >= 2.
LandscapeScan landscape_scan(const PointCloud& cloud, const GeodesicMatrix& geo,
                             const TrainConfig& cfg, const Eigen::VectorXd& theta0,
                             const Eigen::VectorXd& theta1, const Eigen::VectorXd& theta2,
                             int grid);

/// Concatenated encoder+decoder parameter vector for landscape snapshots.
Eigen::VectorXd snapshot_parameters(const Mlp& encoder, const Mlp& decoder);

/// Named regularizer combinations used by the ablation experiments.
LossConfig ablation_preset(const std::string& tag);
std::vector<std::string> ablation_tags();

}  // namespace blae
