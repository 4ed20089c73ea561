#include "blae/pointcloud.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "blae/errors.hpp"

namespace blae {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_double(const std::string& field, const std::filesystem::path& path) {
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size())
    throw DataError("malformed numeric field '" + field + "' in " + path.string());
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void PointCloud::validate() const {
  if (points.rows() < 2) throw DataError("point cloud must contain at least 2 points");
  if (intrinsic.rows() != points.rows())
    throw DataError("intrinsic row count does not match point count");
  if (!points.allFinite()) throw DataError("point cloud contains non-finite coordinates");
  if (labels && static_cast<Eigen::Index>(labels->size()) != points.rows())
    throw DataError("label count does not match point count");
}

void save_csv(const PointCloud& cloud, const std::filesystem::path& path) {
  std::string out;
  const Eigen::Index m = cloud.ambient_dim();
  const Eigen::Index k = cloud.intrinsic_dim();
  for (Eigen::Index j = 0; j < m; ++j) {
    out += "x" + std::to_string(j) + ",";
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    out += "u" + std::to_string(j) + ",";
  }
  out += "label\n";
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      append_double(out, cloud.points(i, j));
      out.push_back(',');
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      append_double(out, cloud.intrinsic(i, j));
      out.push_back(',');
    }
    if (cloud.labels) out += std::to_string((*cloud.labels)[static_cast<std::size_t>(i)]);
    out.push_back('\n');
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << out;
}

PointCloud load_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw DataError("empty CSV file " + path.string());

  const auto header = split_csv_line(line);
  Eigen::Index m = 0, k = 0;
  for (const auto& h : header) {
    if (!h.empty() && h[0] == 'x') ++m;
    if (!h.empty() && h[0] == 'u') ++k;
  }
  if (m == 0 || header.empty() || header.back() != "label")
    throw DataError("unexpected CSV header in " + path.string());

  std::vector<double> pts, intr;
  std::vector<int> labels;
  bool any_label = false;
  Eigen::Index n = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != m + k + 1)
      throw DataError("wrong field count in " + path.string());
    for (Eigen::Index j = 0; j < m; ++j) pts.push_back(parse_double(fields[j], path));
    for (Eigen::Index j = 0; j < k; ++j) intr.push_back(parse_double(fields[m + j], path));
    const std::string& lab = fields.back();
    if (!lab.empty()) {
      any_label = true;
      labels.push_back(std::stoi(lab));
    } else {
      labels.push_back(0);
    }
    ++n;
  }

  PointCloud cloud;
  cloud.points.resize(n, m);
  cloud.intrinsic.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) cloud.points(i, j) = pts[static_cast<std::size_t>(i * m + j)];
    for (Eigen::Index j = 0; j < k; ++j) cloud.intrinsic(i, j) = intr[static_cast<std::size_t>(i * k + j)];
  }
  if (any_label) cloud.labels = std::move(labels);
  cloud.validate();
  return cloud;
}

}  // namespace blae
