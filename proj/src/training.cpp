#include "blae/training.hpp"

#include <chrono>
#include <cmath>

#include "blae/errors.hpp"

namespace blae {

void TrainConfig::validate(Eigen::Index n_samples) const {
  if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (lr <= 0.0) throw ConfigError("train: lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("train: lr_decay must lie in (0,1]");
  if (lr_step < 1) throw ConfigError("train: lr_step must be positive");
  if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
  if (static_cast<Eigen::Index>(batch_size) > n_samples)
    throw ConfigError("train: batch_size exceeds the sample count");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be nonnegative");
  if (arch.size() < 2) throw ConfigError("train: arch needs at least input and latent widths");
  loss.validate(/*allow_auto_delta=*/true);
}

double scheduled_lr(const TrainConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.lr_step));
}

void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& state,
               double lr, double beta1, double beta2, double eps, double weight_decay) {
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double g = grad(i) + weight_decay * theta(i);
    state.m(i) = beta1 * state.m(i) + (1.0 - beta1) * g;
    state.v(i) = beta2 * state.v(i) + (1.0 - beta2) * g * g;
    const double mhat = state.m(i) / bc1;
    const double vhat = state.v(i) / bc2;
    theta(i) -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

Eigen::MatrixXd embed_cloud(const Mlp& encoder, const PointCloud& cloud) {
  return forward_batch(encoder, cloud.points);
}

namespace {

std::vector<int> mirrored(const std::vector<int>& widths) {
  return {widths.rbegin(), widths.rend()};
}

struct ParamPack {
  Eigen::VectorXd theta;
  Eigen::Index enc_count = 0;

  void pull(const Mlp& enc, const Mlp& dec) {
    enc_count = parameter_count(enc);
    theta.resize(enc_count + parameter_count(dec));
    theta.head(enc_count) = get_parameters(enc);
    theta.tail(theta.size() - enc_count) = get_parameters(dec);
  }
  void push(Mlp& enc, Mlp& dec) const {
    set_parameters(enc, theta.head(enc_count));
    set_parameters(dec, theta.tail(theta.size() - enc_count));
  }
};

}  // namespace

RunArtifacts train(const PointCloud& cloud, const GeodesicMatrix& geo, const TrainConfig& cfg) {
  cloud.validate();
  const Eigen::Index n = cloud.size();
  if (geo.size() != n) throw DataError("train: geodesic matrix size does not match the cloud");
  cfg.validate(n);
  if (cfg.arch.front() != cloud.ambient_dim())
    throw ConfigError("train: arch input width does not match the ambient dimension");

  const auto t_start = std::chrono::steady_clock::now();

  LossConfig loss_cfg = cfg.loss;
  if (loss_cfg.delta == 0.0) loss_cfg.delta = delta_min_finite(geo);
  loss_cfg.validate();

  Rng root(cfg.seed);
  Rng init_rng = root.derive("init");
  Rng shuffle_rng = root.derive("shuffle");
  Rng jac_rng = root.derive("jac");

  Mlp encoder = make_mlp(cfg.arch, cfg.activation, init_rng);
  Mlp decoder = make_mlp(mirrored(cfg.arch), cfg.activation, init_rng);

  RunArtifacts art;
  art.encoder_init = encoder;
  art.decoder_init = decoder;

  ParamPack pack;
  pack.pull(encoder, decoder);
  AdamState adam(pack.theta.size());
  Gradients denc(encoder), ddec(decoder);

  art.resolved_delta = loss_cfg.delta;

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs && !art.failed; ++epoch) {
    const double lr = scheduled_lr(cfg, epoch);
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<std::size_t> batch_idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
      Eigen::MatrixXd batch(static_cast<Eigen::Index>(batch_idx.size()), cloud.ambient_dim());
      for (std::size_t r = 0; r < batch_idx.size(); ++r)
        batch.row(static_cast<Eigen::Index>(r)) =
            cloud.points.row(static_cast<Eigen::Index>(batch_idx[r]));
      const Eigen::MatrixXd geo_sub = pair_submatrix(geo.dist, batch_idx);

      denc.set_zero();
      ddec.set_zero();
      LossBreakdown bd;
      try {
        bd = loss_gradients(encoder, decoder, batch, geo_sub, loss_cfg, jac_rng, denc, ddec);
      } catch (const NumericError& err) {
        art.failed = true;
        art.failure_reason = err.what();
        break;  // models still hold the last finite state
      }

      Eigen::VectorXd grad(pack.theta.size());
      grad.head(pack.enc_count) = gradient_vector(denc);
      grad.tail(grad.size() - pack.enc_count) = gradient_vector(ddec);
      adam_step(pack.theta, grad, adam, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
                cfg.weight_decay);
      pack.push(encoder, decoder);

      art.curve.push_back({step, bd});
      ++step;
    }
  }

  art.encoder = std::move(encoder);
  art.decoder = std::move(decoder);
  art.embedding = forward_batch(art.encoder, cloud.points);
  art.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return art;
}

KappaSearchResult kappa_search(const PointCloud& cloud, const GeodesicMatrix& geo,
                               const TrainConfig& base_cfg, double lo, double hi, double tol,
                               int budget) {
  if (!(lo >= 1.0 && lo <= hi)) throw ConfigError("kappa_search: need 1 <= lo <= hi");
  if (budget < 1) throw ConfigError("kappa_search: budget must be positive");

  KappaSearchResult result;
  auto trial = [&](double kappa) {
    TrainConfig cfg = base_cfg;
    cfg.loss.kappa = kappa;
    const RunArtifacts art = train(cloud, geo, cfg);
    LossConfig probe = cfg.loss;
    probe.delta = art.resolved_delta;
    const double residual = bilip_loss(art.decoder, art.embedding, probe);
    const bool ok = !art.failed && residual <= tol;
    result.trials.push_back({kappa, residual, ok});
    return ok;
  };

  if (lo == hi) {
    result.accepted = trial(lo);
    result.chosen = lo;
    return result;
  }

  double best = 0.0;
  for (int it = 0; it < budget; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (trial(mid)) {
      best = mid;
      result.accepted = true;
      hi = mid;
    } else {
      lo = mid;
    }
  }
  result.chosen = result.accepted ? best : result.trials.back().kappa;
  return result;
}

Eigen::VectorXd snapshot_parameters(const Mlp& encoder, const Mlp& decoder) {
  Eigen::VectorXd theta(parameter_count(encoder) + parameter_count(decoder));
  theta.head(parameter_count(encoder)) = get_parameters(encoder);
  theta.tail(parameter_count(decoder)) = get_parameters(decoder);
  return theta;
}

namespace {

struct LandscapeContext {
  Mlp encoder;
  Mlp decoder;
  LossConfig loss_cfg;
  Eigen::Index enc_count = 0;

  LandscapePoint eval(const PointCloud& cloud, const GeodesicMatrix& geo,
                      const Eigen::VectorXd& theta) {
    set_parameters(encoder, theta.head(enc_count));
    set_parameters(decoder, theta.tail(theta.size() - enc_count));
    LandscapePoint pt;
    const Eigen::MatrixXd z = forward_batch(encoder, cloud.points);
    const Eigen::MatrixXd recon = forward_batch(decoder, z);
    pt.recon = (cloud.points - recon).rowwise().squaredNorm().mean();
    // Pair regularizer exactly as trained: L_reg = L_inj + alpha * L_nonexp.
    pt.recon_reg = pt.recon + loss_cfg.lambda_reg * reg_loss_latent(z, geo.dist, loss_cfg);
    return pt;
  }
};

LandscapeContext make_landscape_context(const PointCloud& cloud, const GeodesicMatrix& geo,
                                        const TrainConfig& cfg, Eigen::Index theta_size) {
  LandscapeContext ctx;
  Rng rng(0);
  ctx.encoder = make_mlp(cfg.arch, cfg.activation, rng);
  ctx.decoder = make_mlp(mirrored(cfg.arch), cfg.activation, rng);
  ctx.enc_count = parameter_count(ctx.encoder);
  const Eigen::Index total = ctx.enc_count + parameter_count(ctx.decoder);
  if (theta_size != total)
    throw std::invalid_argument("landscape: snapshot size does not match the configured arch");
  ctx.loss_cfg = cfg.loss;
  if (ctx.loss_cfg.delta == 0.0) ctx.loss_cfg.delta = delta_min_finite(geo);
  return ctx;
}

}  // namespace

LandscapePoint landscape_point(const PointCloud& cloud, const GeodesicMatrix& geo,
                               const TrainConfig& cfg, const Eigen::VectorXd& theta0,
                               const Eigen::VectorXd& theta1, const Eigen::VectorXd& theta2,
                               double a, double b) {
  if (theta0.size() != theta1.size() || theta0.size() != theta2.size())
    throw std::invalid_argument("landscape: snapshot sizes differ");
  LandscapeContext ctx = make_landscape_context(cloud, geo, cfg, theta0.size());
  const Eigen::VectorXd theta = theta0 + a * (theta1 - theta0) + b * (theta2 - theta0);
  return ctx.eval(cloud, geo, theta);
}

LandscapeScan landscape_scan(const PointCloud& cloud, const GeodesicMatrix& geo,
                             const TrainConfig& cfg, const Eigen::VectorXd& theta0,
                             const Eigen::VectorXd& theta1, const Eigen::VectorXd& theta2,
                             int grid) {
  if (grid < 2) throw ConfigError("landscape: grid must be at least 2");
  if (theta0.size() != theta1.size() || theta0.size() != theta2.size())
    throw std::invalid_argument("landscape: snapshot sizes differ");
  LandscapeContext ctx = make_landscape_context(cloud, geo, cfg, theta0.size());

  LandscapeScan scan;
  scan.coords.resize(static_cast<std::size_t>(grid));
  for (int i = 0; i < grid; ++i)
    scan.coords[static_cast<std::size_t>(i)] =
        -0.25 + 1.5 * static_cast<double>(i) / static_cast<double>(grid - 1);
  scan.recon.resize(grid, grid);
  scan.recon_reg.resize(grid, grid);

  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double a = scan.coords[static_cast<std::size_t>(i)];
      const double b = scan.coords[static_cast<std::size_t>(j)];
      const Eigen::VectorXd theta = theta0 + a * (theta1 - theta0) + b * (theta2 - theta0);
      const LandscapePoint pt = ctx.eval(cloud, geo, theta);
      scan.recon(i, j) = pt.recon;
      scan.recon_reg(i, j) = pt.recon_reg;
    }
  }
  return scan;
}

LossConfig ablation_preset(const std::string& tag) {
  LossConfig cfg;  // defaults: lambda_reg=1, lambda_bilip=0.3, kappa=1, epsilon=0.3
  cfg.baseline = BaselineKind::None;
  cfg.baseline_weight = 0.0;
  if (tag == "vanilla") {
    cfg.lambda_reg = 0.0;
    cfg.lambda_bilip = 0.0;
  } else if (tag == "inj_only") {
    cfg.lambda_bilip = 0.0;
  } else if (tag == "spae_only") {
    cfg.lambda_reg = 0.0;
    cfg.lambda_bilip = 0.0;
    cfg.baseline = BaselineKind::DistancePreserving;
    cfg.baseline_weight = 2.0;
  } else if (tag == "inj_bilip") {
    // Full BLAE combination with kappa = 1.
  } else if (tag == "spae_bilip") {
    cfg.lambda_reg = 0.0;
    cfg.baseline = BaselineKind::DistancePreserving;
    cfg.baseline_weight = 2.0;
  } else if (tag == "bilip_only") {
    cfg.lambda_reg = 0.0;
  } else if (tag == "contractive") {
    cfg.lambda_reg = 0.0;
    cfg.lambda_bilip = 0.0;
    cfg.baseline = BaselineKind::Contractive;
    cfg.baseline_weight = 0.1;
  } else {
    throw ConfigError("unknown ablation tag '" + tag + "'");
  }
  return cfg;
}

std::vector<std::string> ablation_tags() {
  return {"vanilla",    "inj_only",   "spae_only", "inj_bilip",
          "spae_bilip", "bilip_only", "contractive"};
}

}  // namespace blae
