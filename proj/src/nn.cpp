#include "blae/nn.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "blae/errors.hpp"

namespace blae {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Elu: return "elu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "elu") return Activation::Elu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + name + "'");
}

double act_value(Activation a, double x) {
  switch (a) {
    case Activation::Elu: return x > 0.0 ? x : std::expm1(x);
    case Activation::Tanh: return std::tanh(x);
    case Activation::Identity: return x;
  }
  return x;
}

double act_deriv(Activation a, double x) {
  switch (a) {
    case Activation::Elu: return x > 0.0 ? 1.0 : std::exp(x);
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

double act_deriv2(Activation a, double x) {
  switch (a) {
    case Activation::Elu: return x > 0.0 ? 0.0 : std::exp(x);
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return -2.0 * t * (1.0 - t * t);
    }
    case Activation::Identity: return 0.0;
  }
  return 0.0;
}

namespace {

Eigen::MatrixXd apply_act(Activation a, const Eigen::MatrixXd& pre) {
  if (a == Activation::Identity) return pre;
  return pre.unaryExpr([a](double x) { return act_value(a, x); });
}

Eigen::MatrixXd apply_act_deriv(Activation a, const Eigen::MatrixXd& pre) {
  return pre.unaryExpr([a](double x) { return act_deriv(a, x); });
}

}  // namespace

void Mlp::validate() const {
  if (layers.empty()) throw ConfigError("mlp: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    if (layer.weight.rows() != layer.bias.size())
      throw ConfigError("mlp: bias length mismatch in layer " + std::to_string(l));
    if (l > 0 && layer.weight.cols() != layers[l - 1].weight.rows())
      throw ConfigError("mlp: layer shapes do not chain at layer " + std::to_string(l));
    if (!layer.weight.allFinite() || !layer.bias.allFinite())
      throw NumericError("mlp: non-finite parameters in layer " + std::to_string(l));
  }
}

Mlp make_mlp(const std::vector<int>& widths, Activation act, Rng& rng) {
  if (widths.size() < 2) throw ConfigError("mlp: need at least input and output widths");
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    if (in < 1 || out < 1) throw ConfigError("mlp: widths must be positive");
    Layer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    for (int r = 0; r < out; ++r) layer.bias(r) = rng.uniform(-bound, bound);
    layer.act = (l + 2 == widths.size()) ? Activation::Identity : act;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

ForwardTrace forward_trace(const Mlp& mlp, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != mlp.in_dim())
    throw std::invalid_argument("forward: input has " + std::to_string(inputs.cols()) +
                                " columns, expected " + std::to_string(mlp.in_dim()));
  ForwardTrace trace;
  trace.input = inputs;
  const Eigen::MatrixXd* h = &trace.input;
  for (const Layer& layer : mlp.layers) {
    Eigen::MatrixXd pre = (*h) * layer.weight.transpose();
    pre.rowwise() += layer.bias.transpose();
    trace.pre.push_back(pre);
    trace.post.push_back(apply_act(layer.act, pre));
    h = &trace.post.back();
  }
  return trace;
}

Eigen::MatrixXd forward_batch(const Mlp& mlp, const Eigen::MatrixXd& inputs) {
  if (inputs.cols() != mlp.in_dim())
    throw std::invalid_argument("forward: input has " + std::to_string(inputs.cols()) +
                                " columns, expected " + std::to_string(mlp.in_dim()));
  Eigen::MatrixXd h = inputs;
  for (const Layer& layer : mlp.layers) {
    Eigen::MatrixXd pre = h * layer.weight.transpose();
    pre.rowwise() += layer.bias.transpose();
    h = apply_act(layer.act, pre);
  }
  return h;
}

Eigen::VectorXd forward(const Mlp& mlp, const Eigen::VectorXd& input) {
  return forward_batch(mlp, input.transpose()).row(0);
}

Gradients::Gradients(const Mlp& mlp) {
  for (const Layer& layer : mlp.layers) {
    dweight.emplace_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    dbias.emplace_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
}

void Gradients::set_zero() {
  for (auto& w : dweight) w.setZero();
  for (auto& b : dbias) b.setZero();
}

void Gradients::scale(double s) {
  for (auto& w : dweight) w *= s;
  for (auto& b : dbias) b *= s;
}

Eigen::MatrixXd backward(const Mlp& mlp, const ForwardTrace& trace,
                         const Eigen::MatrixXd& dout, Gradients& grads) {
  const std::size_t L = mlp.layers.size();
  Eigen::MatrixXd dh = dout;
  for (std::size_t l = L; l-- > 0;) {
    const Layer& layer = mlp.layers[l];
    Eigen::MatrixXd dpre;
    if (layer.act == Activation::Identity)
      dpre = std::move(dh);
    else
      dpre = dh.cwiseProduct(apply_act_deriv(layer.act, trace.pre[l]));
    const Eigen::MatrixXd& below = l == 0 ? trace.input : trace.post[l - 1];
    grads.dweight[l].noalias() += dpre.transpose() * below;
    grads.dbias[l] += dpre.colwise().sum().transpose();
    dh = dpre * layer.weight;
  }
  return dh;
}

Eigen::Index parameter_count(const Mlp& mlp) {
  Eigen::Index n = 0;
  for (const Layer& layer : mlp.layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

Eigen::VectorXd get_parameters(const Mlp& mlp) {
  Eigen::VectorXd theta(parameter_count(mlp));
  Eigen::Index off = 0;
  for (const Layer& layer : mlp.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) theta(off++) = layer.weight(r, c);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) theta(off++) = layer.bias(r);
  }
  return theta;
}

void set_parameters(Mlp& mlp, const Eigen::VectorXd& theta) {
  if (theta.size() != parameter_count(mlp))
    throw std::invalid_argument("set_parameters: size mismatch");
  Eigen::Index off = 0;
  for (Layer& layer : mlp.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = theta(off++);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = theta(off++);
  }
}

Eigen::VectorXd gradient_vector(const Gradients& grads) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < grads.dweight.size(); ++l)
    n += grads.dweight[l].size() + grads.dbias[l].size();
  Eigen::VectorXd g(n);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < grads.dweight.size(); ++l) {
    const auto& w = grads.dweight[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) g(off++) = w(r, c);
    for (Eigen::Index r = 0; r < grads.dbias[l].size(); ++r) g(off++) = grads.dbias[l](r);
  }
  return g;
}

JacobianTrace jacobian_trace(const Mlp& mlp, const Eigen::VectorXd& input) {
  if (input.size() != mlp.in_dim())
    throw std::invalid_argument("jacobian: input size mismatch");
  JacobianTrace trace;
  trace.input = input;
  const Eigen::Index n = input.size();
  Eigen::VectorXd h = input;
  Eigen::MatrixXd tangent = Eigen::MatrixXd::Identity(n, n);
  for (const Layer& layer : mlp.layers) {
    Eigen::VectorXd pre = layer.weight * h + layer.bias;
    Eigen::MatrixXd tpre = layer.weight * tangent;
    Eigen::VectorXd post(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) post(i) = act_value(layer.act, pre(i));
    Eigen::MatrixXd tpost = tpre;
    if (layer.act != Activation::Identity)
      for (Eigen::Index i = 0; i < pre.size(); ++i) tpost.row(i) *= act_deriv(layer.act, pre(i));
    trace.pre.push_back(std::move(pre));
    trace.post.push_back(std::move(post));
    trace.tangent_pre.push_back(std::move(tpre));
    trace.tangent.push_back(std::move(tpost));
    h = trace.post.back();
    tangent = trace.tangent.back();
  }
  return trace;
}

Eigen::MatrixXd jacobian(const Mlp& mlp, const Eigen::VectorXd& input) {
  return jacobian_trace(mlp, input).jacobian();
}

Eigen::VectorXd jacobian_backward(const Mlp& mlp, const JacobianTrace& trace,
                                  const Eigen::MatrixXd& djac, Gradients& grads) {
  const std::size_t L = mlp.layers.size();
  if (djac.rows() != mlp.out_dim() || djac.cols() != mlp.in_dim())
    throw std::invalid_argument("jacobian_backward: cotangent shape mismatch");

  // Sweep 1: reverse through the tangent chain T_l = diag(act'(p_l)) W_l T_{l-1},
  // collecting the pre-activation cotangents induced by act'(p_l).
  std::vector<Eigen::VectorXd> dpre_tan(L);
  Eigen::MatrixXd dtan = djac;
  for (std::size_t l = L; l-- > 0;) {
    const Layer& layer = mlp.layers[l];
    Eigen::MatrixXd dtpre = dtan;
    dpre_tan[l] = Eigen::VectorXd::Zero(layer.bias.size());
    if (layer.act != Activation::Identity) {
      const Eigen::VectorXd& pre = trace.pre[l];
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        const double dd = trace.tangent_pre[l].row(i).dot(dtan.row(i));
        dpre_tan[l](i) = act_deriv2(layer.act, pre(i)) * dd;
        dtpre.row(i) *= act_deriv(layer.act, pre(i));
      }
    }
    if (l > 0)
      grads.dweight[l].noalias() += dtpre * trace.tangent[l - 1].transpose();
    else
      grads.dweight[0] += dtpre;  // T_0 is the identity
    if (l > 0) dtan = layer.weight.transpose() * dtpre;
  }

  // Sweep 2: ordinary reverse pass through the value chain, seeded by the
  // act''(p) cotangents gathered above.
  Eigen::VectorXd dh = Eigen::VectorXd::Zero(mlp.out_dim());
  for (std::size_t l = L; l-- > 0;) {
    const Layer& layer = mlp.layers[l];
    Eigen::VectorXd dpre = dpre_tan[l];
    if (layer.act == Activation::Identity) {
      dpre += dh;
    } else {
      const Eigen::VectorXd& pre = trace.pre[l];
      for (Eigen::Index i = 0; i < pre.size(); ++i)
        dpre(i) += act_deriv(layer.act, pre(i)) * dh(i);
    }
    const Eigen::VectorXd& below = l == 0 ? trace.input : trace.post[l - 1];
    grads.dweight[l].noalias() += dpre * below.transpose();
    grads.dbias[l] += dpre;
    dh = layer.weight.transpose() * dpre;
  }
  return dh;
}

namespace {

/// Eigen-decomposition of a symmetric n x n matrix (n <= 3) by cyclic Jacobi
/// rotations. Returns eigenvalues ascending with matching eigenvector columns.
void symmetric_eigen_small(Eigen::MatrixXd a, Eigen::VectorXd& evals, Eigen::MatrixXd& evecs) {
  const Eigen::Index n = a.rows();
  evecs = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
        rot(p, p) = c;
        rot(q, q) = c;
        rot(p, q) = s;
        rot(q, p) = -s;
        a = rot.transpose() * a * rot;
        evecs = evecs * rot;
      }
    }
  }
  evals = a.diagonal();
  // Sort ascending, permuting eigenvectors alongside.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (evals(j) < evals(i)) {
        std::swap(evals(i), evals(j));
        evecs.col(i).swap(evecs.col(j));
      }
}

}  // namespace

SpectralPair singular_pair(const Eigen::MatrixXd& jac) {
  const Eigen::Index n = jac.cols();
  if (n < 1 || n > 3) throw std::invalid_argument("singular_pair: need 1 <= cols <= 3");
  if (!jac.allFinite()) throw NumericError("singular_pair: non-finite Jacobian");

  if (n == 1) {
    const double s = jac.col(0).norm();
    return {s, s};
  }
  const Eigen::MatrixXd gram = jac.transpose() * jac;
  if (n == 2) {
    const double tr = gram(0, 0) + gram(1, 1);
    const double det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
    const double rad = std::max(tr * tr - 4.0 * det, 0.0);
    const double root = std::sqrt(rad);
    const double lmax = 0.5 * (tr + root);
    const double lmin = std::max(0.5 * (tr - root), 0.0);
    return {std::sqrt(lmin), std::sqrt(lmax)};
  }
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  symmetric_eigen_small(gram, evals, evecs);
  return {std::sqrt(std::max(evals(0), 0.0)), std::sqrt(std::max(evals(n - 1), 0.0))};
}

namespace {

Eigen::Vector2d gram2_eigenvector(const Eigen::Matrix2d& a, double lambda, bool want_max) {
  const Eigen::Vector2d v1(a(0, 1), lambda - a(0, 0));
  const Eigen::Vector2d v2(lambda - a(1, 1), a(1, 0));
  Eigen::Vector2d v = v1.norm() >= v2.norm() ? v1 : v2;
  if (v.norm() < 1e-300) {
    // Degenerate (scaled identity Gram): any direction is an eigenvector.
    return want_max ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(0.0, 1.0);
  }
  return v.normalized();
}

}  // namespace

SpectralGrad singular_pair_grad(const Eigen::MatrixXd& jac) {
  const Eigen::Index n = jac.cols();
  SpectralGrad out;
  out.values = singular_pair(jac);
  out.dmin.setZero(jac.rows(), n);
  out.dmax.setZero(jac.rows(), n);

  auto rank1 = [&](double sigma, const Eigen::VectorXd& v, Eigen::MatrixXd& dst) {
    double denom = sigma;
    if (denom < kSigmaFloor) {
      denom = kSigmaFloor;
      ++out.floor_hits;
    }
    const Eigen::VectorXd u = jac * v / denom;
    dst = u * v.transpose();
  };

  if (n == 1) {
    Eigen::VectorXd v(1);
    v(0) = 1.0;
    rank1(out.values.sigma_max, v, out.dmax);
    out.dmin = out.dmax;
    return out;
  }

  if (n == 2) {
    const Eigen::Matrix2d gram = (jac.transpose() * jac).eval();
    const double lmin = out.values.sigma_min * out.values.sigma_min;
    const double lmax = out.values.sigma_max * out.values.sigma_max;
    rank1(out.values.sigma_min, gram2_eigenvector(gram, lmin, false), out.dmin);
    rank1(out.values.sigma_max, gram2_eigenvector(gram, lmax, true), out.dmax);
    return out;
  }

  const Eigen::MatrixXd gram = jac.transpose() * jac;
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  symmetric_eigen_small(gram, evals, evecs);
  rank1(out.values.sigma_min, evecs.col(0), out.dmin);
  rank1(out.values.sigma_max, evecs.col(n - 1), out.dmax);
  return out;
}

void save_checkpoint(const Mlp& mlp, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f << checkpoint_json(mlp) << "\n";
}

std::string checkpoint_json(const Mlp& mlp) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : mlp.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.push_back(layer.weight(r, c));
    std::vector<double> b(layer.bias.data(), layer.bias.data() + layer.bias.size());
    layers.push_back({{"rows", layer.weight.rows()},
                      {"cols", layer.weight.cols()},
                      {"activation", activation_name(layer.act)},
                      {"weights", w},
                      {"bias", b}});
  }
  nlohmann::json doc{{"schema", "mlp-v1"}, {"layers", layers}};
  return doc.dump();
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return mlp_from_json(text);
}

Mlp mlp_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || doc.value("schema", "") != "mlp-v1")
    throw DataError("not an mlp-v1 checkpoint");
  Mlp mlp;
  for (const auto& jl : doc.at("layers")) {
    Layer layer;
    const Eigen::Index rows = jl.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = jl.at("cols").get<Eigen::Index>();
    layer.act = activation_from_name(jl.at("activation").get<std::string>());
    const auto w = jl.at("weights").get<std::vector<double>>();
    const auto b = jl.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows)
      throw DataError("checkpoint layer size mismatch");
    layer.weight.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        layer.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
    mlp.layers.push_back(std::move(layer));
  }
  mlp.validate();
  return mlp;
}

}  // namespace blae
