#include "blae/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "blae/errors.hpp"

namespace blae {

namespace {

std::string short_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t s = 0;
  while (s < n) {
    std::size_t e = s;
    while (e + 1 < n && values[order[e + 1]] == values[order[s]]) ++e;
    const double r = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t t = s; t <= e; ++t) ranks[order[t]] = r;
    s = e + 1;
  }
  return ranks;
}

}  // namespace

RecallResult knn_recall(const GeodesicMatrix& geo_data, const GeodesicMatrix& geo_latent,
                        const std::vector<int>& ks) {
  const Eigen::Index n = geo_data.size();
  if (geo_latent.size() != n)
    throw std::invalid_argument("knn_recall: matrix sizes differ");
  if (ks.empty()) throw std::invalid_argument("knn_recall: no k values");
  for (int k : ks)
    if (k < 1 || static_cast<Eigen::Index>(k) >= n)
      throw std::invalid_argument("knn_recall: k must satisfy 1 <= k < N");

  RecallResult result;
  const int kmax = *std::max_element(ks.begin(), ks.end());
  for (int k : ks) result.per_k[k] = 0.0;

  std::vector<std::uint32_t> inter;
  inter.reserve(static_cast<std::size_t>(kmax));
  for (Eigen::Index i = 0; i < n; ++i) {
    // One sorted candidate list per matrix, reused for every k.
    std::vector<std::pair<double, std::uint32_t>> cd, cl;
    cd.reserve(static_cast<std::size_t>(n - 1));
    cl.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      cd.emplace_back(geo_data.dist(i, j), static_cast<std::uint32_t>(j));
      cl.emplace_back(geo_latent.dist(i, j), static_cast<std::uint32_t>(j));
    }
    std::partial_sort(cd.begin(), cd.begin() + kmax, cd.end());
    std::partial_sort(cl.begin(), cl.begin() + kmax, cl.end());
    for (int k : ks) {
      std::vector<std::uint32_t> a(static_cast<std::size_t>(k)), b(static_cast<std::size_t>(k));
      for (int t = 0; t < k; ++t) {
        a[static_cast<std::size_t>(t)] = cd[static_cast<std::size_t>(t)].second;
        b[static_cast<std::size_t>(t)] = cl[static_cast<std::size_t>(t)].second;
      }
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      inter.clear();
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
      result.per_k[k] += static_cast<double>(inter.size()) / static_cast<double>(k);
    }
  }
  double mean = 0.0;
  for (auto& [k, v] : result.per_k) {
    v /= static_cast<double>(n);
    mean += v;
  }
  result.mean = mean / static_cast<double>(result.per_k.size());
  return result;
}

double kl_sigma(const GeodesicMatrix& geo_data, const GeodesicMatrix& geo_latent, double sigma) {
  const Eigen::Index n = geo_data.size();
  if (n < 2) throw std::invalid_argument("kl_sigma: need at least 2 points");
  if (geo_latent.size() != n) throw std::invalid_argument("kl_sigma: matrix sizes differ");
  if (!(sigma > 0.0)) throw std::invalid_argument("kl_sigma: sigma must be positive");
  if (!geo_data.dist.allFinite() || !geo_latent.dist.allFinite())
    throw std::invalid_argument("kl_sigma: matrices must be finite");

  auto densities = [&](const Eigen::MatrixXd& dist) {
    const double dmax = dist.maxCoeff();
    if (dmax <= 0.0) throw std::invalid_argument("kl_sigma: all-zero distance matrix");
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double r = dist(i, j) / dmax;
        s += std::exp(-(r * r) / sigma);
      }
      f(i) = s;
    }
    return Eigen::VectorXd(f / f.sum());
  };

  const Eigen::VectorXd p = densities(geo_data.dist);
  const Eigen::VectorXd q = densities(geo_latent.dist);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) kl += p(i) * std::log(p(i) / q(i));
  return kl;
}

double recon_mse(const PointCloud& cloud, const Mlp& encoder, const Mlp& decoder) {
  const Eigen::MatrixXd recon = forward_batch(decoder, forward_batch(encoder, cloud.points));
  return (cloud.points - recon).squaredNorm() /
         static_cast<double>(cloud.points.rows() * cloud.points.cols());
}

BilipCheck verify_bilip(const Mlp& encoder, const PointCloud& cloud, const KnnGraph& graph,
                        double kappa, double tol) {
  if (kappa < 1.0) throw std::invalid_argument("verify_bilip: kappa must be >= 1");
  if (static_cast<Eigen::Index>(graph.n) != cloud.size())
    throw std::invalid_argument("verify_bilip: graph does not match the cloud");

  const Eigen::MatrixXd z = forward_batch(encoder, cloud.points);
  const double lo = 1.0 / kappa - tol;
  const double hi = kappa + tol;

  BilipCheck check;
  std::vector<std::pair<double, BilipViolation>> scored;  // violation magnitude
  std::size_t within = 0, total = 0;
  double rmin = std::numeric_limits<double>::infinity();
  double rmax = -std::numeric_limits<double>::infinity();
  for (const auto& [i, j, w] : graph.edges()) {
    if (w <= 0.0) continue;  // duplicate points carry no ratio information
    const double dn = (z.row(i) - z.row(j)).norm();
    const double ratio = dn / w;
    rmin = std::min(rmin, ratio);
    rmax = std::max(rmax, ratio);
    ++total;
    if (ratio >= lo && ratio <= hi) {
      ++within;
    } else {
      const double excess = ratio < lo ? lo - ratio : ratio - hi;
      scored.push_back({excess, {i, j, ratio}});
    }
  }
  if (total == 0) throw std::invalid_argument("verify_bilip: no usable edges");
  check.fraction_within = static_cast<double>(within) / static_cast<double>(total);
  check.ratio_bounds = {rmin, rmax};
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t t = 0; t < scored.size() && t < 10; ++t) check.worst.push_back(scored[t].second);
  return check;
}

RankTable rank_table(const std::map<std::string, std::vector<EvalReport>>& reports) {
  if (reports.empty()) throw std::invalid_argument("rank_table: no reports");
  const std::size_t n_datasets = reports.begin()->second.size();
  if (n_datasets == 0) throw std::invalid_argument("rank_table: empty report lists");
  for (const auto& [name, list] : reports)
    if (list.size() != n_datasets)
      throw std::invalid_argument("rank_table: ragged report lists (method " + name + ")");

  RankTable table;
  for (const auto& [name, list] : reports) table.methods.push_back(name);

  // Measures: recall (higher better), each KL bandwidth, MSE (lower better).
  std::vector<double> bandwidths;
  for (const auto& [bw, v] : reports.begin()->second.front().kl) bandwidths.push_back(bw);
  table.measures.push_back("knn");
  for (double bw : bandwidths) table.measures.push_back("kl_" + short_double(bw));
  table.measures.push_back("mse");

  auto measure_value = [&](const EvalReport& r, const std::string& m) -> double {
    if (m == "knn") return -r.knn_recall;  // negate so lower is better everywhere
    if (m == "mse") return r.mse;
    for (const auto& [bw, v] : r.kl)
      if ("kl_" + short_double(bw) == m) return v;
    throw std::invalid_argument("rank_table: reports lack measure " + m);
  };

  for (const std::string& m : table.measures) {
    std::vector<std::vector<double>> per_method_ranks(table.methods.size());
    for (std::size_t d = 0; d < n_datasets; ++d) {
      std::vector<double> values;
      for (const auto& name : table.methods) values.push_back(measure_value(reports.at(name)[d], m));
      const std::vector<double> ranks = average_ranks(values);
      for (std::size_t mi = 0; mi < table.methods.size(); ++mi)
        per_method_ranks[mi].push_back(ranks[mi]);
    }
    std::vector<RankCell> row;
    for (const auto& rs : per_method_ranks) {
      RankCell cell;
      for (double r : rs) cell.mean += r;
      cell.mean /= static_cast<double>(rs.size());
      for (double r : rs) cell.stddev += (r - cell.mean) * (r - cell.mean);
      cell.stddev = std::sqrt(cell.stddev / static_cast<double>(rs.size()));
      row.push_back(cell);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string RankTable::to_csv() const {
  std::string out = "measure";
  for (const auto& m : methods) out += "," + m + "_mean," + m + "_std";
  out += "\n";
  for (std::size_t r = 0; r < measures.size(); ++r) {
    out += measures[r];
    for (const RankCell& cell : rows[r])
      out += "," + short_double(cell.mean) + "," + short_double(cell.stddev);
    out += "\n";
  }
  return out;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("spearman: need two equal-length series");
  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double embedding_diameter(const Eigen::MatrixXd& points) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j)
      best = std::max(best, (points.row(i) - points.row(j)).norm());
  return best;
}

Eigen::MatrixXd align_orthogonal(const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst) {
  if (src.rows() != dst.rows() || src.cols() != dst.cols())
    throw std::invalid_argument("align_orthogonal: shape mismatch");
  const Eigen::RowVectorXd mu_s = src.colwise().mean();
  const Eigen::RowVectorXd mu_d = dst.colwise().mean();
  const Eigen::MatrixXd a = src.rowwise() - mu_s;
  const Eigen::MatrixXd b = dst.rowwise() - mu_d;
  const Eigen::MatrixXd cov = a.transpose() * b;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
  return ((a * rot).rowwise() + mu_d).eval();
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::json per_k, kl;
  for (const auto& [k, v] : report.per_k_recall) per_k[std::to_string(k)] = v;
  for (const auto& [bw, v] : report.kl) kl[short_double(bw)] = v;
  nlohmann::json doc{{"knn_recall", report.knn_recall},
                     {"per_k_recall", per_k},
                     {"kl", kl},
                     {"mse", report.mse},
                     {"bilip_ratio_bounds",
                      {report.bilip_ratio_bounds.first, report.bilip_ratio_bounds.second}}};
  return doc.dump(2);
}

}  // namespace blae
