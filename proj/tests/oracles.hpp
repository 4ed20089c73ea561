#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately separate from the library code paths they check: plain loops
// instead of Eigen expressions, one-sided Jacobi SVD instead of Gram closed
// forms, exhaustive path enumeration instead of Dijkstra.

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "blae/nn.hpp"

namespace blae::oracles {

/// MLP forward pass written as straight scalar loops over std::vector.
std::vector<double> straight_mlp_forward(const Mlp& mlp, const std::vector<double>& input);

/// Central finite differences of f at theta.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& theta, double step = 1e-5);

/// Central finite-difference Jacobian of a vector map.
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step = 1e-6);

/// Shortest paths by exhaustive simple-path enumeration (graphs up to ~8
/// nodes). Edges are (i, j, w) undirected; unreachable pairs give +inf.
Eigen::MatrixXd brute_shortest_paths(
    std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges);

/// All singular values (descending) via one-sided Jacobi orthogonalization.
std::vector<double> jacobi_svd_values(Eigen::MatrixXd a);

/// Solves arclength(theta) = s for theta by bisection on the closed-form
/// forward arc length of the logarithmic spiral r = e^{b theta}.
double bisect_theta_for_arclength(double s, double b);

/// Max relative error between two gradient vectors, with an absolute floor
/// so near-zero entries do not blow up the ratio.
double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-6);

/// True when every pre-activation of every sample stays farther than
/// `margin` from the piecewise boundary at 0 (keeps finite differences
/// well-posed around ELU kinks).
bool far_from_kinks(const Mlp& mlp, const Eigen::MatrixXd& inputs, double margin = 1e-3);

}  // namespace blae::oracles
