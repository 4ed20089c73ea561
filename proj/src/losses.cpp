#include "blae/losses.hpp"

#include <cmath>
#include <string>

#include "blae/errors.hpp"

namespace blae {

namespace {
constexpr double kCollisionEta = 1e-12;

void require_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss term: ") + term);
}
}  // namespace

std::string baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::None: return "none";
    case BaselineKind::Contractive: return "contractive";
    case BaselineKind::DistancePreserving: return "distance_preserving";
  }
  return "none";
}

BaselineKind baseline_from_name(const std::string& name) {
  if (name == "none") return BaselineKind::None;
  if (name == "contractive") return BaselineKind::Contractive;
  if (name == "distance_preserving") return BaselineKind::DistancePreserving;
  throw ConfigError("unknown baseline '" + name + "'");
}

void LossConfig::validate(bool allow_auto_delta) const {
  if (kappa < 1.0) throw ConfigError("loss: kappa must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("loss: epsilon must lie in (0,1)");
  if (alpha <= 0.0) throw ConfigError("loss: alpha must be positive");
  if (!(jac_subsample > 0.0 && jac_subsample <= 1.0))
    throw ConfigError("loss: jac_subsample must lie in (0,1]");
  if (!allow_auto_delta && delta <= 0.0) throw ConfigError("loss: delta must be positive");
  if (allow_auto_delta && delta < 0.0) throw ConfigError("loss: delta must be nonnegative");
  if (lambda_reg < 0.0 || lambda_bilip < 0.0 || baseline_weight < 0.0)
    throw ConfigError("loss: weights must be nonnegative");
}

Eigen::MatrixXd pair_submatrix(const Eigen::MatrixXd& dist,
                               const std::vector<std::size_t>& indices) {
  const Eigen::Index b = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd sub(b, b);
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = 0; j < b; ++j)
      sub(i, j) = dist(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(i)]),
                       static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]));
  return sub;
}

namespace {

struct PairTerms {
  double inj = 0.0;
  double nonexp = 0.0;
  long long included = 0;
  long long collisions = 0;
};

/// Single pass over in-batch pairs with d_M > delta. When dz is non-null,
/// accumulates w_inj * dL_inj/dz + w_nonexp * dL_nonexp/dz (gradients of the
/// raw means).
PairTerms pair_terms(const Eigen::MatrixXd& z, const Eigen::MatrixXd& geo_sub,
                     const LossConfig& cfg, double w_inj, double w_nonexp,
                     Eigen::MatrixXd* dz) {
  const Eigen::Index b = z.rows();
  const Eigen::Index n = z.cols();
  PairTerms out;
  // First pass counts the included pairs so gradient weights can fold the
  // mean in directly.
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = i + 1; j < b; ++j) {
      const double dm = geo_sub(i, j);
      if (std::isfinite(dm) && dm > cfg.delta) ++out.included;
    }
  if (out.included == 0) return out;
  const double inv_count = 1.0 / static_cast<double>(out.included);

  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = i + 1; j < b; ++j) {
      const double dm = geo_sub(i, j);
      if (!(std::isfinite(dm) && dm > cfg.delta)) continue;
      double dn2 = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        const double d = z(i, c) - z(j, c);
        dn2 += d * d;
      }
      const double dn = std::sqrt(dn2);

      if (dn < kCollisionEta) {
        ++out.collisions;
        const double capped = std::log(cfg.epsilon * dm / kCollisionEta);
        if (capped > 0.0) out.inj += capped * inv_count;
        // Collision cap is constant in z: no gradient contribution.
        continue;
      }

      const double log_ratio = std::log(cfg.epsilon * dm / dn);
      if (log_ratio > 0.0) {
        out.inj += log_ratio * inv_count;
        if (dz && w_inj != 0.0) {
          const double coef = -w_inj * inv_count / dn2;
          for (Eigen::Index c = 0; c < n; ++c) {
            const double d = z(i, c) - z(j, c);
            (*dz)(i, c) += coef * d;
            (*dz)(j, c) -= coef * d;
          }
        }
      }

      const double ratio = dn / dm - 1.0;
      if (ratio > 0.0) {
        out.nonexp += ratio * inv_count;
        if (dz && w_nonexp != 0.0) {
          const double coef = w_nonexp * inv_count / (dm * dn);
          for (Eigen::Index c = 0; c < n; ++c) {
            const double d = z(i, c) - z(j, c);
            (*dz)(i, c) += coef * d;
            (*dz)(j, c) -= coef * d;
          }
        }
      }
    }
  }
  return out;
}

/// Mean of (d_N/d_M - 1)^2 over finite d_M > 0 pairs; optional gradient.
double dp_terms(const Eigen::MatrixXd& z, const Eigen::MatrixXd& geo_sub, double w,
                Eigen::MatrixXd* dz) {
  const Eigen::Index b = z.rows();
  const Eigen::Index n = z.cols();
  long long count = 0;
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = i + 1; j < b; ++j) {
      const double dm = geo_sub(i, j);
      if (std::isfinite(dm) && dm > 0.0) ++count;
    }
  if (count == 0) return 0.0;
  const double inv_count = 1.0 / static_cast<double>(count);

  double value = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = i + 1; j < b; ++j) {
      const double dm = geo_sub(i, j);
      if (!(std::isfinite(dm) && dm > 0.0)) continue;
      double dn2 = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        const double d = z(i, c) - z(j, c);
        dn2 += d * d;
      }
      const double dn = std::sqrt(dn2);
      const double ratio = dn / dm - 1.0;
      value += ratio * ratio * inv_count;
      if (dz && w != 0.0 && dn > 0.0) {
        const double coef = w * inv_count * 2.0 * ratio / (dm * dn);
        for (Eigen::Index c = 0; c < n; ++c) {
          const double d = z(i, c) - z(j, c);
          (*dz)(i, c) += coef * d;
          (*dz)(j, c) -= coef * d;
        }
      }
    }
  }
  return value;
}

double recon_from_traces(const Eigen::MatrixXd& batch, const Eigen::MatrixXd& recon) {
  return (batch - recon).rowwise().squaredNorm().mean();
}

std::size_t jac_count(double fraction, Eigen::Index batch_size) {
  const auto b = static_cast<std::size_t>(batch_size);
  std::size_t count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(b)));
  if (count < 1) count = 1;
  if (count > b) count = b;
  return count;
}

/// Spectral hinge value at one latent point plus optional dL/dJ (scaled by w).
double bilip_point(const Mlp& decoder, const Eigen::VectorXd& z, const LossConfig& cfg,
                   double w, Gradients* ddec, Eigen::VectorXd* dz_out, Diagnostics* diag) {
  if (ddec == nullptr) {
    const SpectralPair sp = singular_pair(jacobian(decoder, z));
    const double lo = std::max(1.0 / cfg.kappa - sp.sigma_min, 0.0);
    const double hi = std::max(sp.sigma_max - cfg.kappa, 0.0);
    return lo * lo + hi * hi;
  }
  const JacobianTrace trace = jacobian_trace(decoder, z);
  const SpectralGrad sg = singular_pair_grad(trace.jacobian());
  const double lo = std::max(1.0 / cfg.kappa - sg.values.sigma_min, 0.0);
  const double hi = std::max(sg.values.sigma_max - cfg.kappa, 0.0);
  const double value = lo * lo + hi * hi;
  if (lo > 0.0 || hi > 0.0) {
    const Eigen::MatrixXd djac = w * (-2.0 * lo * sg.dmin + 2.0 * hi * sg.dmax);
    const Eigen::VectorXd dz = jacobian_backward(decoder, trace, djac, *ddec);
    if (dz_out) *dz_out = dz;
    if (diag) diag->sigma_floor_hits += sg.floor_hits;
  } else if (dz_out) {
    dz_out->setZero(z.size());
  }
  return value;
}

}  // namespace

double recon_loss(const Mlp& encoder, const Mlp& decoder, const Eigen::MatrixXd& batch) {
  if (batch.rows() == 0) throw std::invalid_argument("recon_loss: empty batch");
  const Eigen::MatrixXd recon = forward_batch(decoder, forward_batch(encoder, batch));
  const double v = recon_from_traces(batch, recon);
  require_finite(v, "recon");
  return v;
}

double injective_loss(const Mlp& encoder, const Eigen::MatrixXd& batch,
                      const Eigen::MatrixXd& geo_sub, const LossConfig& cfg,
                      Diagnostics* diag) {
  const Eigen::MatrixXd z = forward_batch(encoder, batch);
  const PairTerms t = pair_terms(z, geo_sub, cfg, 0.0, 0.0, nullptr);
  if (diag) diag->dn_collisions += t.collisions;
  require_finite(t.inj, "injective");
  return t.inj;
}

double nonexpansive_loss(const Mlp& encoder, const Eigen::MatrixXd& batch,
                         const Eigen::MatrixXd& geo_sub, const LossConfig& cfg) {
  const Eigen::MatrixXd z = forward_batch(encoder, batch);
  const PairTerms t = pair_terms(z, geo_sub, cfg, 0.0, 0.0, nullptr);
  require_finite(t.nonexp, "nonexpansive");
  return t.nonexp;
}

double reg_loss(const Mlp& encoder, const Eigen::MatrixXd& batch,
                const Eigen::MatrixXd& geo_sub, const LossConfig& cfg, Diagnostics* diag) {
  return reg_loss_latent(forward_batch(encoder, batch), geo_sub, cfg, diag);
}

double reg_loss_latent(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& geo_sub,
                       const LossConfig& cfg, Diagnostics* diag) {
  const PairTerms t = pair_terms(latent, geo_sub, cfg, 0.0, 0.0, nullptr);
  if (diag) diag->dn_collisions += t.collisions;
  return t.inj + cfg.alpha * t.nonexp;
}

double bilip_loss(const Mlp& decoder, const Eigen::MatrixXd& latent, const LossConfig& cfg) {
  if (latent.rows() == 0) throw std::invalid_argument("bilip_loss: empty latent batch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < latent.rows(); ++i)
    sum += bilip_point(decoder, latent.row(i).transpose(), cfg, 0.0, nullptr, nullptr, nullptr);
  const double v = sum / static_cast<double>(latent.rows());
  require_finite(v, "bilip");
  return v;
}

double contractive_loss(const Mlp& encoder, const Eigen::MatrixXd& batch) {
  if (batch.rows() == 0) throw std::invalid_argument("contractive_loss: empty batch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < batch.rows(); ++i)
    sum += jacobian(encoder, batch.row(i).transpose()).squaredNorm();
  const double v = sum / static_cast<double>(batch.rows());
  require_finite(v, "contractive");
  return v;
}

double distance_preserving_loss(const Mlp& encoder, const Eigen::MatrixXd& batch,
                                const Eigen::MatrixXd& geo_sub) {
  const Eigen::MatrixXd z = forward_batch(encoder, batch);
  const double v = dp_terms(z, geo_sub, 0.0, nullptr);
  require_finite(v, "distance_preserving");
  return v;
}

namespace {

LossBreakdown evaluate(const Mlp& encoder, const Mlp& decoder, const Eigen::MatrixXd& batch,
                       const Eigen::MatrixXd& geo_sub, const LossConfig& cfg, Rng& jac_rng,
                       Gradients* denc, Gradients* ddec) {
  cfg.validate();
  if (batch.rows() == 0) throw std::invalid_argument("loss: empty batch");
  if (geo_sub.rows() != batch.rows() || geo_sub.cols() != batch.rows())
    throw std::invalid_argument("loss: geodesic block does not match batch size");

  const bool with_grad = denc != nullptr;
  const Eigen::Index b = batch.rows();
  LossBreakdown out;

  ForwardTrace enc_trace = forward_trace(encoder, batch);
  const Eigen::MatrixXd& z = enc_trace.output();
  ForwardTrace dec_trace = forward_trace(decoder, z);
  const Eigen::MatrixXd& recon = dec_trace.output();

  Eigen::MatrixXd dz;
  if (with_grad) dz = Eigen::MatrixXd::Zero(b, z.cols());

  const double recon_raw = recon_from_traces(batch, recon);
  require_finite(recon_raw, "recon");
  out.recon = recon_raw;

  // Pair regularizers on the latent batch.
  if (cfg.lambda_reg > 0.0) {
    const PairTerms pt =
        pair_terms(z, geo_sub, cfg, with_grad ? cfg.lambda_reg : 0.0,
                   with_grad ? cfg.lambda_reg * cfg.alpha : 0.0, with_grad ? &dz : nullptr);
    out.diag.dn_collisions += pt.collisions;
    require_finite(pt.inj, "injective");
    require_finite(pt.nonexp, "nonexpansive");
    out.inj = cfg.lambda_reg * pt.inj;
    out.nonexp = cfg.lambda_reg * cfg.alpha * pt.nonexp;
  }

  if (cfg.baseline == BaselineKind::DistancePreserving && cfg.baseline_weight > 0.0) {
    const double dp = dp_terms(z, geo_sub, with_grad ? cfg.baseline_weight : 0.0,
                               with_grad ? &dz : nullptr);
    require_finite(dp, "distance_preserving");
    out.baseline = cfg.baseline_weight * dp;
  }

  // Spectral term on a deterministic subsample of the latent batch.
  if (cfg.lambda_bilip > 0.0) {
    const std::size_t count = jac_count(cfg.jac_subsample, b);
    const std::vector<std::size_t> idx = jac_rng.sample_indices(static_cast<std::size_t>(b), count);
    const double w = cfg.lambda_bilip / static_cast<double>(count);
    double sum = 0.0;
    Eigen::VectorXd dzi;
    for (std::size_t s : idx) {
      const Eigen::Index row = static_cast<Eigen::Index>(s);
      sum += bilip_point(decoder, z.row(row).transpose(), cfg, w, ddec,
                         with_grad ? &dzi : nullptr, &out.diag);
      if (with_grad) dz.row(row) += dzi.transpose();
    }
    const double bilip_raw = sum / static_cast<double>(count);
    require_finite(bilip_raw, "bilip");
    out.bilip = cfg.lambda_bilip * bilip_raw;
  }

  if (cfg.baseline == BaselineKind::Contractive) {
    double sum = 0.0;
    const double w = cfg.baseline_weight * 2.0 / static_cast<double>(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      if (with_grad) {
        const JacobianTrace jt = jacobian_trace(encoder, batch.row(i).transpose());
        sum += jt.jacobian().squaredNorm();
        jacobian_backward(encoder, jt, w * jt.jacobian(), *denc);
      } else {
        sum += jacobian(encoder, batch.row(i).transpose()).squaredNorm();
      }
    }
    const double cae = sum / static_cast<double>(b);
    require_finite(cae, "contractive");
    out.baseline = cfg.baseline_weight * cae;
  }

  if (with_grad) {
    const Eigen::MatrixXd drecon = (2.0 / static_cast<double>(b)) * (recon - batch);
    dz += backward(decoder, dec_trace, drecon, *ddec);
    backward(encoder, enc_trace, dz, *denc);
  }

  out.total = out.recon + out.inj + out.nonexp + out.bilip + out.baseline;
  require_finite(out.total, "total");
  return out;
}

}  // namespace

LossBreakdown total_loss(const Mlp& encoder, const Mlp& decoder, const Eigen::MatrixXd& batch,
                         const Eigen::MatrixXd& geo_sub, const LossConfig& cfg, Rng& jac_rng) {
  return evaluate(encoder, decoder, batch, geo_sub, cfg, jac_rng, nullptr, nullptr);
}

LossBreakdown loss_gradients(const Mlp& encoder, const Mlp& decoder,
                             const Eigen::MatrixXd& batch, const Eigen::MatrixXd& geo_sub,
                             const LossConfig& cfg, Rng& jac_rng, Gradients& denc,
                             Gradients& ddec) {
  return evaluate(encoder, decoder, batch, geo_sub, cfg, jac_rng, &denc, &ddec);
}

}  // namespace blae
