#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "blae/cli.hpp"
#include "blae/geodesics.hpp"
#include "blae/losses.hpp"
#include "blae/manifolds.hpp"
#include "blae/metrics.hpp"
#include "blae/nn.hpp"
#include "blae/training.hpp"

namespace py = pybind11;
using namespace blae;

namespace {

PointCloud cloud_from_arrays(const Eigen::MatrixXd& points, const Eigen::MatrixXd& intrinsic,
                             std::optional<std::vector<int>> labels) {
  PointCloud cloud;
  cloud.points = points;
  cloud.intrinsic = intrinsic;
  cloud.labels = std::move(labels);
  cloud.validate();
  return cloud;
}

GeodesicMatrix geo_from_matrix(const Eigen::MatrixXd& dist, int k) {
  GeodesicMatrix geo;
  geo.dist = dist;
  geo.k = k;
  geo.connected = dist.allFinite();
  return geo;
}

cli::Config value_to_json(const py::handle& obj) {
  if (py::isinstance<py::bool_>(obj)) return py::cast<bool>(obj);
  if (py::isinstance<py::int_>(obj)) return py::cast<long long>(obj);
  if (py::isinstance<py::float_>(obj)) return py::cast<double>(obj);
  if (py::isinstance<py::str>(obj)) return py::cast<std::string>(obj);
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    cli::Config arr = cli::Config::array();
    for (const auto& item : py::cast<py::sequence>(obj)) arr.push_back(value_to_json(item));
    return arr;
  }
  if (obj.is_none()) return nullptr;
  throw std::invalid_argument("unsupported config value type");
}

}  // namespace

PYBIND11_MODULE(_blae, m) {
  m.doc() = "Bi-Lipschitz autoencoder core: manifolds, geodesics, losses, training, metrics.";

  py::class_<PointCloud>(m, "PointCloud")
      .def(py::init(&cloud_from_arrays), py::arg("points"), py::arg("intrinsic"),
           py::arg("labels") = std::nullopt)
      .def_readonly("points", &PointCloud::points)
      .def_readonly("intrinsic", &PointCloud::intrinsic)
      .def_readonly("labels", &PointCloud::labels)
      .def_readonly("seed", &PointCloud::seed)
      .def("__len__", [](const PointCloud& c) { return c.size(); });

  m.def(
      "generate_swiss_roll",
      [](std::size_t n_samples, double b, std::pair<double, double> s_range,
         std::pair<double, double> z_range, std::optional<std::vector<double>> strip,
         std::uint64_t seed) {
        SwissRollSpec spec;
        spec.n_samples = n_samples;
        spec.b = b;
        spec.s_range = {s_range.first, s_range.second};
        spec.z_range = {z_range.first, z_range.second};
        if (strip) {
          if (strip->size() != 4)
            throw std::invalid_argument("strip must be [s_lo, s_hi, z_lo, z_hi]");
          spec.strip = Rect{{(*strip)[0], (*strip)[1]}, {(*strip)[2], (*strip)[3]}};
        } else {
          spec.strip.reset();
        }
        spec.seed = seed;
        return generate_swiss_roll(spec);
      },
      py::arg("n_samples") = 1500, py::arg("b") = 0.1,
      py::arg("s_range") = std::pair<double, double>(-2.0, 10.0),
      py::arg("z_range") = std::pair<double, double>(0.0, 6.0),
      py::arg("strip") = std::vector<double>{1.5, 6.5, 2.5, 3.5}, py::arg("seed") = 0,
      "Sample the logarithmic-spiral Swiss Roll with intrinsic (s, z) coordinates.");

  m.def(
      "generate_vshape",
      [](std::size_t n_samples, double arm_length, double angle, double noise,
         std::uint64_t seed) {
        VShapeSpec spec{n_samples, arm_length, angle, noise, seed};
        return generate_vshape(spec);
      },
      py::arg("n_samples") = 20, py::arg("arm_length") = 1.0,
      py::arg("angle") = std::numbers::pi / 3.0, py::arg("noise") = 0.0, py::arg("seed") = 0);

  m.def("theta_of_arclength", &theta_of_arclength, py::arg("s"), py::arg("b"));
  m.def("arclength_of_theta", &arclength_of_theta, py::arg("theta"), py::arg("b"));

  m.def(
      "geodesic_distances",
      [](const Eigen::MatrixXd& points, int k) {
        const GeodesicMatrix geo = all_pairs_geodesics(build_knn_graph(points, k));
        return py::make_tuple(geo.dist, geo.connected);
      },
      py::arg("points"), py::arg("k"),
      "Dense shortest-path distances over the symmetrized k-NN graph; returns (dist, connected).");

  m.def(
      "delta_min",
      [](const Eigen::MatrixXd& dist, int k) { return delta_min(geo_from_matrix(dist, k)); },
      py::arg("dist"), py::arg("k") = 0);

  py::class_<Mlp>(m, "Mlp")
      .def_static("from_json", &mlp_from_json, py::arg("text"))
      .def("to_json", &checkpoint_json)
      .def("forward", [](const Mlp& mlp, const Eigen::VectorXd& x) { return forward(mlp, x); },
           py::arg("input"))
      .def("forward_batch",
           [](const Mlp& mlp, const Eigen::MatrixXd& x) { return forward_batch(mlp, x); },
           py::arg("inputs"))
      .def("jacobian",
           [](const Mlp& mlp, const Eigen::VectorXd& z) { return jacobian(mlp, z); },
           py::arg("input"))
      .def_property_readonly("in_dim", &Mlp::in_dim)
      .def_property_readonly("out_dim", &Mlp::out_dim);

  m.def(
      "singular_pair",
      [](const Eigen::MatrixXd& jac) {
        const SpectralPair sp = singular_pair(jac);
        return py::make_tuple(sp.sigma_min, sp.sigma_max);
      },
      py::arg("jacobian"), "Extreme singular values of an m x n matrix with n <= 3.");

  m.def(
      "train",
      [](const PointCloud& cloud, const Eigen::MatrixXd& geo_dist, const py::dict& overrides) {
        cli::Config cfg = cli::preset_config("default");
        for (const auto& item : overrides) {
          const std::string key = py::cast<std::string>(item.first);
          if (!cfg.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
          cfg[key] = value_to_json(item.second);
        }
        const TrainConfig tc = cli::train_config_from(cfg);
        const RunArtifacts art = train(cloud, geo_from_matrix(geo_dist, cfg.at("geo.k").get<int>()), tc);
        py::dict out;
        out["embedding"] = art.embedding;
        out["encoder_json"] = checkpoint_json(art.encoder);
        out["decoder_json"] = checkpoint_json(art.decoder);
        out["failed"] = art.failed;
        out["wall_seconds"] = art.wall_seconds;
        out["delta"] = art.resolved_delta;
        std::vector<double> totals, recons;
        for (const auto& row : art.curve) {
          totals.push_back(row.loss.total);
          recons.push_back(row.loss.recon);
        }
        out["total_curve"] = totals;
        out["recon_curve"] = recons;
        return out;
      },
      py::arg("cloud"), py::arg("geo_dist"), py::arg("config") = py::dict(),
      "Train an autoencoder; config is a dict of flat keys like {'train.epochs': 100}.");

  m.def(
      "knn_recall",
      [](const Eigen::MatrixXd& geo_data, const Eigen::MatrixXd& geo_latent,
         const std::vector<int>& ks) {
        const RecallResult r = knn_recall(geo_from_matrix(geo_data, 0),
                                          geo_from_matrix(geo_latent, 0), ks);
        return py::make_tuple(r.mean, r.per_k);
      },
      py::arg("geo_data"), py::arg("geo_latent"), py::arg("ks"));

  m.def(
      "kl_sigma",
      [](const Eigen::MatrixXd& geo_data, const Eigen::MatrixXd& geo_latent, double sigma) {
        return kl_sigma(geo_from_matrix(geo_data, 0), geo_from_matrix(geo_latent, 0), sigma);
      },
      py::arg("geo_data"), py::arg("geo_latent"), py::arg("sigma"));

  m.def("spearman", &spearman, py::arg("xs"), py::arg("ys"));

  m.def(
      "recon_loss",
      [](const Mlp& enc, const Mlp& dec, const Eigen::MatrixXd& batch) {
        return recon_loss(enc, dec, batch);
      },
      py::arg("encoder"), py::arg("decoder"), py::arg("batch"));

  m.def(
      "bilip_loss",
      [](const Mlp& dec, const Eigen::MatrixXd& latent, double kappa) {
        LossConfig cfg;
        cfg.kappa = kappa;
        cfg.delta = 1.0;  // unused by the spectral term
        return bilip_loss(dec, latent, cfg);
      },
      py::arg("decoder"), py::arg("latent"), py::arg("kappa") = 1.0);

  m.attr("__version__") = "0.1.0";
}
