#include "blae/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "blae/errors.hpp"

namespace blae {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kPad = 40;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::ofstream open_svg(const std::filesystem::path& path, const std::string& title) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kPad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
    << title << "</text>\n";
  return f;
}

struct Scale {
  double lo, hi;
  double to_px(double v, int px_lo, int px_hi) const {
    const double span = hi - lo;
    const double t = span > 0.0 ? (v - lo) / span : 0.5;
    return px_lo + t * (px_hi - px_lo);
  }
};

}  // namespace

void write_scatter_svg(const std::filesystem::path& path, const Eigen::MatrixXd& points,
                       const std::optional<std::vector<int>>& labels, const std::string& title) {
  Eigen::MatrixXd xy = Eigen::MatrixXd::Zero(points.rows(), 2);
  xy.col(0) = points.col(0);
  if (points.cols() > 1) xy.col(1) = points.col(1);

  Scale sx{xy.col(0).minCoeff(), xy.col(0).maxCoeff()};
  Scale sy{xy.col(1).minCoeff(), xy.col(1).maxCoeff()};

  auto f = open_svg(path, title);
  for (Eigen::Index i = 0; i < xy.rows(); ++i) {
    const double px = sx.to_px(xy(i, 0), kPad, kWidth - kPad);
    const double py = sy.to_px(xy(i, 1), kHeight - kPad, kPad);
    const char* color = kPalette[0];
    if (labels) {
      const int lab = (*labels)[static_cast<std::size_t>(i)];
      color = kPalette[static_cast<std::size_t>(lab % 6 < 0 ? lab % 6 + 6 : lab % 6)];
    }
    f << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"2\" fill=\"" << color
      << "\" fill-opacity=\"0.7\"/>\n";
  }
  f << "</svg>\n";
}

void write_curve_svg(const std::filesystem::path& path, const std::vector<double>& values,
                     const std::string& title) {
  if (values.empty()) throw DataError("curve svg: no values");
  std::vector<double> ys = values;
  const double vmin = *std::min_element(ys.begin(), ys.end());
  const double vmax = *std::max_element(ys.begin(), ys.end());
  std::string label = title;
  if (vmin > 0.0 && vmax / vmin > 100.0) {
    for (double& y : ys) y = std::log10(y);
    label += " (log10)";
  }

  Scale sx{0.0, static_cast<double>(ys.size() - 1)};
  Scale sy{*std::min_element(ys.begin(), ys.end()), *std::max_element(ys.begin(), ys.end())};

  auto f = open_svg(path, label);
  f << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double px = sx.to_px(static_cast<double>(i), kPad, kWidth - kPad);
    const double py = sy.to_px(ys[i], kHeight - kPad, kPad);
    f << px << "," << py << " ";
  }
  f << "\"/>\n</svg>\n";
}

}  // namespace blae
