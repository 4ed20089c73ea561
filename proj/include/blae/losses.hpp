#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "blae/nn.hpp"
#include "blae/rng.hpp"

namespace blae {

enum class BaselineKind { None, Contractive, DistancePreserving };

std::string baseline_name(BaselineKind k);
BaselineKind baseline_from_name(const std::string& name);

/// Weights and thresholds of the full training objective. `delta` equal to 0
/// means "resolve to delta_min of the training set" and must be replaced by a
/// positive value before losses are evaluated.
struct LossConfig {
  double lambda_reg = 1.0;
  double lambda_bilip = 0.3;
  double kappa = 1.0;
  double epsilon = 0.3;
  double alpha = 5.0;
  double delta = 0.0;
  double jac_subsample = 0.10;
  BaselineKind baseline = BaselineKind::None;
  double baseline_weight = 0.0;

  void validate(bool allow_auto_delta = false) const;
};

/// Counters for the numeric escape hatches: latent collisions capped in the
/// injective term and sigma values clamped to the gradient floor.
struct Diagnostics {
  long long dn_collisions = 0;
  long long sigma_floor_hits = 0;

  Diagnostics& operator+=(const Diagnostics& o) {
    dn_collisions += o.dn_collisions;
    sigma_floor_hits += o.sigma_floor_hits;
    return *this;
  }
};

/// Weighted contributions of each objective term; they sum to `total`.
struct LossBreakdown {
  double recon = 0.0;
  double inj = 0.0;
  double nonexp = 0.0;
  double bilip = 0.0;
  double baseline = 0.0;
  double total = 0.0;
  Diagnostics diag;
};

/// B x B block of a pairwise-distance matrix for the given sample indices.
Eigen::MatrixXd pair_submatrix(const Eigen::MatrixXd& dist,
                               const std::vector<std::size_t>& indices);

/// Mean squared reconstruction error: per-sample squared vector norm averaged
/// over the batch (no per-coordinate mean; the reporting MSE in metrics uses
/// the per-coordinate convention).
double recon_loss(const Mlp& encoder, const Mlp& decoder, const Eigen::MatrixXd& batch);

/// Separation penalty over in-batch pairs with d_M > delta:
/// mean of ReLU(log(eps * d_M / d_N)). Latent collisions (d_N below 1e-12)
/// contribute the capped value log(eps * d_M / 1e-12).
double injective_loss(const Mlp& encoder, const Eigen::MatrixXd& batch,
                      const Eigen::MatrixXd& geo_sub, const LossConfig& cfg,
                      Diagnostics* diag = nullptr);

/// Non-expansiveness penalty over the same pair set: mean of ReLU(d_N/d_M - 1).
double nonexpansive_loss(const Mlp& encoder, const Eigen::MatrixXd& batch,
                         const Eigen::MatrixXd& geo_sub, const LossConfig& cfg);

/// injective + alpha * non-expansive.
double reg_loss(const Mlp& encoder, const Eigen::MatrixXd& batch,
                const Eigen::MatrixXd& geo_sub, const LossConfig& cfg,
                Diagnostics* diag = nullptr);

/// Same as reg_loss but on precomputed latent codes.
double reg_loss_latent(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& geo_sub,
                       const LossConfig& cfg, Diagnostics* diag = nullptr);

/// Spectral hinge penalty at the given latent points:
/// mean of ReLU(1/kappa - sigma_min)^2 + ReLU(sigma_max - kappa)^2.
double bilip_loss(const Mlp& decoder, const Eigen::MatrixXd& latent, const LossConfig& cfg);

/// Mean squared Frobenius norm of the encoder Jacobian.
double contractive_loss(const Mlp& encoder, const Eigen::MatrixXd& batch);

/// Mean of (d_N/d_M - 1)^2 over pairs with finite d_M > 0.
double distance_preserving_loss(const Mlp& encoder, const Eigen::MatrixXd& batch,
                                const Eigen::MatrixXd& geo_sub);

/// Full objective; the Jacobian subsample is drawn from `jac_rng`.
LossBreakdown total_loss(const Mlp& encoder, const Mlp& decoder, const Eigen::MatrixXd& batch,
                         const Eigen::MatrixXd& geo_sub, const LossConfig& cfg, Rng& jac_rng);

/// Full objective plus reverse-mode gradients for every encoder and decoder
/// parameter. The spectral term is differentiated through the latent points,
/// so its gradient reaches the encoder as well.
LossBreakdown loss_gradients(const Mlp& encoder, const Mlp& decoder,
                             const Eigen::MatrixXd& batch, const Eigen::MatrixXd& geo_sub,
                             const LossConfig& cfg, Rng& jac_rng, Gradients& denc,
                             Gradients& ddec);

}  // namespace blae
