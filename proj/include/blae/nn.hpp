#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "blae/rng.hpp"

namespace blae {

enum class Activation { Elu, Tanh, Identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

double act_value(Activation a, double x);
double act_deriv(Activation a, double x);
double act_deriv2(Activation a, double x);

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation act = Activation::Identity;
};

/// Multilayer perceptron over 64-bit floats. Batches are row-major: one
/// sample per row.
struct Mlp {
  std::vector<Layer> layers;

  Eigen::Index in_dim() const { return layers.front().weight.cols(); }
  Eigen::Index out_dim() const { return layers.back().weight.rows(); }

  /// Throws if layer shapes do not chain or parameters are non-finite.
  void validate() const;
};

/// Hidden layers use `act`, the output layer is linear. Weights and biases
/// start uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Mlp make_mlp(const std::vector<int>& widths, Activation act, Rng& rng);

Eigen::VectorXd forward(const Mlp& mlp, const Eigen::VectorXd& input);
Eigen::MatrixXd forward_batch(const Mlp& mlp, const Eigen::MatrixXd& inputs);

/// Recorded forward pass: everything reverse mode needs to turn an output
/// cotangent into parameter gradients.
struct ForwardTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;

  const Eigen::MatrixXd& output() const { return post.back(); }
};

ForwardTrace forward_trace(const Mlp& mlp, const Eigen::MatrixXd& inputs);

/// Per-layer gradient accumulators, shaped like the model.
struct Gradients {
  std::vector<Eigen::MatrixXd> dweight;
  std::vector<Eigen::VectorXd> dbias;

  explicit Gradients(const Mlp& mlp);
  void set_zero();
  void scale(double s);
};

/// Accumulates d(loss)/d(parameters) into `grads` given d(loss)/d(output);
/// returns d(loss)/d(input).
Eigen::MatrixXd backward(const Mlp& mlp, const ForwardTrace& trace,
                         const Eigen::MatrixXd& dout, Gradients& grads);

/// Flat parameter vector interface (layer order, row-major weights then bias).
Eigen::Index parameter_count(const Mlp& mlp);
Eigen::VectorXd get_parameters(const Mlp& mlp);
void set_parameters(Mlp& mlp, const Eigen::VectorXd& theta);
Eigen::VectorXd gradient_vector(const Gradients& grads);

/// Forward-mode pass propagating the identity tangent through the network,
/// recorded for reverse mode over the Jacobian itself.
struct JacobianTrace {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre;
  std::vector<Eigen::VectorXd> post;
  std::vector<Eigen::MatrixXd> tangent_pre;  // W_l * T_{l-1}
  std::vector<Eigen::MatrixXd> tangent;      // diag(act'(p_l)) * tangent_pre

  const Eigen::MatrixXd& jacobian() const { return tangent.back(); }
};

JacobianTrace jacobian_trace(const Mlp& mlp, const Eigen::VectorXd& input);

/// Exact Jacobian of the network at `input` (out_dim x in_dim).
Eigen::MatrixXd jacobian(const Mlp& mlp, const Eigen::VectorXd& input);

/// Reverse mode through the Jacobian computation: given d(loss)/dJ,
/// accumulates parameter gradients and returns d(loss)/d(input). Needed for
/// losses built from Jacobian entries (spectral and Frobenius penalties).
Eigen::VectorXd jacobian_backward(const Mlp& mlp, const JacobianTrace& trace,
                                  const Eigen::MatrixXd& djac, Gradients& grads);

/// Extreme singular values of a decoder Jacobian at one latent point.
struct SpectralPair {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Closed-form singular values of an m x n matrix with n in {1, 2, 3},
/// computed from the n x n Gram matrix (trace/determinant form for n = 2).
SpectralPair singular_pair(const Eigen::MatrixXd& jac);

/// Singular values plus their derivatives with respect to the matrix
/// entries (d sigma / dJ = u v^T). When a singular value is numerically zero
/// its gradient uses sigma clamped to `kSigmaFloor` and `floor_hits` counts
/// the clamps.
struct SpectralGrad {
  SpectralPair values;
  Eigen::MatrixXd dmin;
  Eigen::MatrixXd dmax;
  int floor_hits = 0;
};

inline constexpr double kSigmaFloor = 1e-8;

SpectralGrad singular_pair_grad(const Eigen::MatrixXd& jac);

/// Checkpoint format "mlp-v1": JSON with per-layer rows, cols, activation,
/// row-major weights and bias. Round-trips exactly.
void save_checkpoint(const Mlp& mlp, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_json(const Mlp& mlp);
Mlp mlp_from_json(const std::string& text);

}  // namespace blae
