#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace blae {

/// Minimal scatter plot; 1-D inputs are drawn along the x axis. Colors cycle
/// by label when labels are given.
void write_scatter_svg(const std::filesystem::path& path, const Eigen::MatrixXd& points,
                       const std::optional<std::vector<int>>& labels, const std::string& title);

/// Polyline of one series; switches to log10 scale when the dynamic range is
/// large and all values are positive.
void write_curve_svg(const std::filesystem::path& path, const std::vector<double>& values,
                     const std::string& title);

}  // namespace blae
