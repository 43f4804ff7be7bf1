#pragma once

// Dense feed-forward scalar critic with reverse-mode gradients with respect to
// parameters and inputs, and a second-order pass that differentiates a loss on
// the input-gradient with respect to the parameters (needed by gradient
// penalties).
//
// Layout: h_0 = x; z_l = W_l h_l + b_l; h_{l+1} = act(z_l) for hidden layers;
// the last layer is linear and has width 1. Batched calls keep one sample per
// column.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"

namespace lipgan {

enum class ActivationKind { relu, leaky_relu, tanh, swish };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.2;  // leaky_relu only

  static Activation parse(const std::string& name, double slope = 0.2) {
    if (name == "relu") return {ActivationKind::relu, slope};
    if (name == "leaky_relu") return {ActivationKind::leaky_relu, slope};
    if (name == "tanh") return {ActivationKind::tanh, slope};
    if (name == "swish") return {ActivationKind::swish, slope};
    throw InvalidArgument("unknown activation '" + name + "'; valid options: relu, leaky_relu, tanh, swish");
  }

  std::string name() const {
    switch (kind) {
      case ActivationKind::relu: return "relu";
      case ActivationKind::leaky_relu: return "leaky_relu";
      case ActivationKind::tanh: return "tanh";
      case ActivationKind::swish: return "swish";
    }
    return "?";
  }

  // The subgradient of relu at 0 is taken as 0.
  double value(double z) const {
    switch (kind) {
      case ActivationKind::relu: return z > 0.0 ? z : 0.0;
      case ActivationKind::leaky_relu: return z > 0.0 ? z : slope * z;
      case ActivationKind::tanh: return std::tanh(z);
      case ActivationKind::swish: return z * sigmoid(z);
    }
    return 0.0;
  }
  double d1(double z) const {
    switch (kind) {
      case ActivationKind::relu: return z > 0.0 ? 1.0 : 0.0;
      case ActivationKind::leaky_relu: return z > 0.0 ? 1.0 : slope;
      case ActivationKind::tanh: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
      }
      case ActivationKind::swish: {
        const double s = sigmoid(z);
        return s + z * s * (1.0 - s);
      }
    }
    return 0.0;
  }
  double d2(double z) const {
    switch (kind) {
      case ActivationKind::relu:
      case ActivationKind::leaky_relu: return 0.0;
      case ActivationKind::tanh: {
        const double t = std::tanh(z);
        return -2.0 * t * (1.0 - t * t);
      }
      case ActivationKind::swish: {
        const double s = sigmoid(z);
        return s * (1.0 - s) * (2.0 + z * (1.0 - 2.0 * s));
      }
    }
    return 0.0;
  }

 private:
  static double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Parameter-shaped container; also used for gradients and optimizer moments.
struct Parameters {
  std::vector<DenseLayer> layers;

  static Parameters zeros_like(const Parameters& p) {
    Parameters z;
    z.layers.reserve(p.layers.size());
    for (const auto& l : p.layers)
      z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    return z;
  }

  bool same_shape(const Parameters& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].weight.rows() != o.layers[i].weight.rows() ||
          layers[i].weight.cols() != o.layers[i].weight.cols() || layers[i].bias.size() != o.layers[i].bias.size())
        return false;
    }
    return true;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  Parameters& operator+=(const Parameters& o) {
    if (!same_shape(o)) throw InvalidArgument("parameter shape mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].weight += o.layers[i].weight;
      layers[i].bias += o.layers[i].bias;
    }
    return *this;
  }

  Parameters& operator*=(double s) {
    for (auto& l : layers) {
      l.weight *= s;
      l.bias *= s;
    }
    return *this;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  // Flat row-major view order: per layer, weight rows then bias.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(count());
    for (const auto& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias[r]);
    }
    return out;
  }

  void unflatten(const std::vector<double>& flat) {
    if (flat.size() != count()) throw InvalidArgument("unflatten: expected " + std::to_string(count()) + " values");
    std::size_t k = 0;
    for (auto& l : layers) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[k++];
    }
  }
};

inline Parameters operator+(Parameters a, const Parameters& b) { return a += b; }
inline Parameters operator*(double s, Parameters p) { return p *= s; }

enum class InitScheme { he, xavier };

class MlpDiscriminator {
 public:
  MlpDiscriminator() = default;

  MlpDiscriminator(std::vector<int> widths, Activation act, Parameters params, std::uint64_t seed = 0)
      : widths_(std::move(widths)), act_(act), params_(std::move(params)), seed_(seed) {
    validate_widths(widths_);
    if (params_.layers.size() != widths_.size() - 1) throw InvalidArgument("layer count does not match widths");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      const auto& layer = params_.layers[l];
      if (layer.weight.rows() != widths_[l + 1] || layer.weight.cols() != widths_[l] ||
          layer.bias.size() != widths_[l + 1])
        throw InvalidArgument("layer " + std::to_string(l) + " shape does not match widths");
    }
    if (!params_.all_finite()) throw InvalidArgument("network parameters must be finite");
  }

  /// Random weights with variance 2/fan_in (he) or 2/(fan_in + fan_out)
  /// (xavier); zero biases.
  static MlpDiscriminator init(const std::vector<int>& widths, Activation act, InitScheme scheme, Rng& rng) {
    validate_widths(widths);
    Parameters p;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const int in = widths[l], out = widths[l + 1];
      const double var = scheme == InitScheme::he ? 2.0 / in : 2.0 / (in + out);
      const double sd = std::sqrt(var);
      DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
      for (Eigen::Index r = 0; r < out; ++r)
        for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = sd * rng.normal();
      p.layers.push_back(std::move(layer));
    }
    return MlpDiscriminator(widths, act, std::move(p), rng.seed());
  }

  /// f(x) = w . x + b.
  static MlpDiscriminator affine(const Point& w, double b) {
    const int d = static_cast<int>(w.size());
    Parameters p;
    p.layers.push_back({w.transpose(), Eigen::VectorXd::Constant(1, b)});
    return MlpDiscriminator({d, 1}, Activation{}, std::move(p));
  }

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  std::size_t layer_count() const { return params_.layers.size(); }
  const Activation& activation() const { return act_; }
  const Parameters& params() const { return params_; }
  Parameters& mutable_params() { return params_; }
  std::uint64_t seed() const { return seed_; }

  // Scales the final affine layer; f becomes c * f.
  void scale_output(double c) {
    params_.layers.back().weight *= c;
    params_.layers.back().bias *= c;
  }

 private:
  static void validate_widths(const std::vector<int>& widths) {
    if (widths.empty()) throw InvalidArgument("network widths must not be empty");
    if (widths.size() < 2) throw InvalidArgument("network needs an input and an output width");
    for (int w : widths)
      if (w < 1) throw InvalidArgument("network widths must be positive");
    if (widths.back() != 1) throw InvalidArgument("network output width must be 1");
  }

  std::vector<int> widths_;
  Activation act_;
  Parameters params_;
  std::uint64_t seed_ = 0;
};

/// Primal values of one batched forward pass plus, once requested, the
/// intermediate adjoints of the input-gradient pass. One tape per call.
struct Tape {
  std::vector<Eigen::MatrixXd> pre;   // z_l, width_{l+1} x batch
  std::vector<Eigen::MatrixXd> post;  // h_l, width_l x batch (post[0] = inputs)
  Eigen::RowVectorXd output;
  // Filled by input_gradients(): dz[l] = d f / d z_l, dh[l] = d f / d h_l.
  std::vector<Eigen::MatrixXd> dz;
  std::vector<Eigen::MatrixXd> dh;
};

namespace detail {

inline Eigen::MatrixXd stack_points(const std::vector<Point>& xs, int dim) {
  Eigen::MatrixXd X(dim, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != dim) throw DimensionMismatch(dim, xs[i].size());
    X.col(static_cast<Eigen::Index>(i)) = xs[i];
  }
  return X;
}

template <typename F>
Eigen::MatrixXd map(const Eigen::MatrixXd& z, F f) {
  return z.unaryExpr(f);
}

}  // namespace detail

inline Tape forward_tape(const MlpDiscriminator& net, const Eigen::MatrixXd& X) {
  if (X.rows() != net.input_dim()) throw DimensionMismatch(net.input_dim(), X.rows());
  const auto& layers = net.params().layers;
  const auto& act = net.activation();
  Tape t;
  t.post.reserve(layers.size());
  t.pre.reserve(layers.size());
  t.post.push_back(X);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].weight * t.post.back();
    z.colwise() += layers[l].bias;
    if (l + 1 < layers.size()) t.post.push_back(detail::map(z, [&](double v) { return act.value(v); }));
    t.pre.push_back(std::move(z));
  }
  t.output = t.pre.back().row(0);
  return t;
}

/// Input-gradient pass on an existing tape; returns d f / d x per column.
inline const Eigen::MatrixXd& input_gradients(const MlpDiscriminator& net, Tape& t) {
  const auto& layers = net.params().layers;
  const auto& act = net.activation();
  const std::size_t L = layers.size();
  const Eigen::Index batch = t.post.front().cols();
  t.dz.assign(L, Eigen::MatrixXd());
  t.dh.assign(L, Eigen::MatrixXd());
  t.dz[L - 1] = Eigen::MatrixXd::Ones(1, batch);
  for (std::size_t l = L; l-- > 0;) {
    t.dh[l] = layers[l].weight.transpose() * t.dz[l];
    if (l > 0) t.dz[l - 1] = t.dh[l].cwiseProduct(detail::map(t.pre[l - 1], [&](double v) { return act.d1(v); }));
  }
  return t.dh[0];
}

inline std::vector<double> forward_batch(const MlpDiscriminator& net, const std::vector<Point>& xs) {
  if (xs.empty()) return {};
  const Tape t = forward_tape(net, detail::stack_points(xs, net.input_dim()));
  return {t.output.data(), t.output.data() + t.output.size()};
}

inline double forward(const MlpDiscriminator& net, const Point& x) {
  if (x.size() != net.input_dim()) throw DimensionMismatch(net.input_dim(), x.size());
  return forward_tape(net, x).output[0];
}

inline Point grad_input(const MlpDiscriminator& net, const Point& x) {
  if (x.size() != net.input_dim()) throw DimensionMismatch(net.input_dim(), x.size());
  Tape t = forward_tape(net, x);
  return input_gradients(net, t).col(0);
}

inline std::vector<Point> grad_input_batch(const MlpDiscriminator& net, const std::vector<Point>& xs) {
  if (xs.empty()) return {};
  Tape t = forward_tape(net, detail::stack_points(xs, net.input_dim()));
  const Eigen::MatrixXd& G = input_gradients(net, t);
  std::vector<Point> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = G.col(static_cast<Eigen::Index>(i));
  return out;
}

/// Sum over the batch of upstream_i * d f(x_i) / d theta, accumulated into
/// `acc` (same shape as the network's parameters).
inline void accumulate_param_grads(const MlpDiscriminator& net, const Tape& t, const Eigen::RowVectorXd& upstream,
                                   Parameters& acc) {
  const auto& layers = net.params().layers;
  const auto& act = net.activation();
  const std::size_t L = layers.size();
  Eigen::MatrixXd delta = upstream;  // d loss / d z_{L-1}
  for (std::size_t l = L; l-- > 0;) {
    acc.layers[l].weight.noalias() += delta * t.post[l].transpose();
    acc.layers[l].bias += delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd dh = layers[l].weight.transpose() * delta;
      delta = dh.cwiseProduct(detail::map(t.pre[l - 1], [&](double v) { return act.d1(v); }));
    }
  }
}

inline Parameters grad_params(const MlpDiscriminator& net, const std::vector<std::pair<Point, double>>& batch) {
  if (batch.empty()) throw InvalidArgument("grad_params: batch must not be empty");
  Eigen::MatrixXd X(net.input_dim(), static_cast<Eigen::Index>(batch.size()));
  Eigen::RowVectorXd up(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].first.size() != net.input_dim()) throw DimensionMismatch(net.input_dim(), batch[i].first.size());
    X.col(static_cast<Eigen::Index>(i)) = batch[i].first;
    up[static_cast<Eigen::Index>(i)] = batch[i].second;
  }
  const Tape t = forward_tape(net, X);
  Parameters acc = Parameters::zeros_like(net.params());
  accumulate_param_grads(net, t, up, acc);
  return acc;
}

/// Second-order pass: given G_bar = d loss / d (grad_x f) per column, adds
/// d loss / d theta to `acc`. Requires input_gradients() on the tape.
///
/// The input-gradient computation dh_l = W_l^T dz_l, dz_{l-1} = dh_l * act'(z_{l-1})
/// is itself reverse-differentiated, then the resulting adjoints on z are
/// pushed back through the forward pass.
inline void accumulate_input_grad_param_grads(const MlpDiscriminator& net, const Tape& t,
                                              const Eigen::MatrixXd& grad_bar, Parameters& acc) {
  const auto& layers = net.params().layers;
  const auto& act = net.activation();
  const std::size_t L = layers.size();
  if (t.dh.size() != L) throw InvalidArgument("tape has no input-gradient pass");

  // Reverse through the backward pass, from dh_0 toward dz_{L-1} = 1.
  std::vector<Eigen::MatrixXd> z_bar(L);  // adjoint reaching z_l through act'(z_l)
  Eigen::MatrixXd dh_bar = grad_bar;
  for (std::size_t l = 0; l < L; ++l) {
    acc.layers[l].weight.noalias() += t.dz[l] * dh_bar.transpose();
    if (l + 1 == L) break;  // dz_{L-1} is the constant 1
    const Eigen::MatrixXd dz_bar = layers[l].weight * dh_bar;
    const Eigen::MatrixXd d1 = detail::map(t.pre[l], [&](double v) { return act.d1(v); });
    const Eigen::MatrixXd d2 = detail::map(t.pre[l], [&](double v) { return act.d2(v); });
    z_bar[l] = dz_bar.cwiseProduct(t.dh[l + 1]).cwiseProduct(d2);
    dh_bar = dz_bar.cwiseProduct(d1);
  }

  // Reverse through the forward pass; the output z_{L-1} has no adjoint.
  Eigen::MatrixXd z_total;
  for (std::size_t l = L - 1; l-- > 0;) {
    Eigen::MatrixXd h_bar;
    if (l + 2 == L) h_bar = Eigen::MatrixXd::Zero(layers[l].weight.rows(), t.post[0].cols());
    else h_bar = layers[l + 1].weight.transpose() * z_total;
    const Eigen::MatrixXd d1 = detail::map(t.pre[l], [&](double v) { return act.d1(v); });
    z_total = z_bar[l] + h_bar.cwiseProduct(d1);
    acc.layers[l].weight.noalias() += z_total * t.post[l].transpose();
    acc.layers[l].bias += z_total.rowwise().sum();
  }
}

struct AdamState {
  Parameters m, v;
  long step = 0;

  static AdamState for_net(const MlpDiscriminator& net) {
    return {Parameters::zeros_like(net.params()), Parameters::zeros_like(net.params()), 0};
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// One bias-corrected Adam step, in place.
inline void adam_step(MlpDiscriminator& net, const Parameters& grads, AdamState& state, const AdamConfig& cfg) {
  Parameters& p = net.mutable_params();
  if (!p.same_shape(grads) || !p.same_shape(state.m) || !p.same_shape(state.v))
    throw InvalidArgument("adam_step: parameter shape mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    theta.array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
  };
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    update(p.layers[l].weight, grads.layers[l].weight, state.m.layers[l].weight, state.v.layers[l].weight);
    update(p.layers[l].bias, grads.layers[l].bias, state.m.layers[l].bias, state.v.layers[l].bias);
  }
}

// Checkpoint text format (leading '#' comment lines are ignored):
//   lipgan-mlp 1
//   widths <w0> <w1> ... <wL>
//   activation <name> <slope>
//   seed <u64>
//   params <count>
//   <one value per line, %.17g; per layer: weight row-major, then bias>
inline void save_checkpoint(const MlpDiscriminator& net, std::ostream& os, const std::string& header = {}) {
  if (!header.empty()) os << "# " << header << "\n";
  os << "lipgan-mlp 1\nwidths";
  for (int w : net.widths()) os << ' ' << w;
  os << "\nactivation " << net.activation().name() << ' ';
  os.precision(17);
  os << net.activation().slope << "\nseed " << net.seed() << "\n";
  const auto flat = net.params().flatten();
  os << "params " << flat.size() << "\n";
  for (double v : flat) os << v << "\n";
}

inline MlpDiscriminator load_checkpoint(std::istream& is) {
  auto expect = [&](const std::string& key) {
    std::string tok;
    if (!(is >> tok) || tok != key) throw ParseError("checkpoint: expected '" + key + "', got '" + tok + "'");
  };
  while (is >> std::ws && is.peek() == '#') {
    std::string comment;
    std::getline(is, comment);
  }
  expect("lipgan-mlp");
  int version = 0;
  if (!(is >> version) || version != 1) throw ParseError("checkpoint: unsupported version");
  expect("widths");
  std::string line;
  std::getline(is, line);
  std::istringstream ws(line);
  std::vector<int> widths;
  for (int w; ws >> w;) widths.push_back(w);
  expect("activation");
  std::string act_name;
  double slope = 0.2;
  if (!(is >> act_name >> slope)) throw ParseError("checkpoint: bad activation line");
  expect("seed");
  std::uint64_t seed = 0;
  if (!(is >> seed)) throw ParseError("checkpoint: bad seed");
  expect("params");
  std::size_t count = 0;
  if (!(is >> count)) throw ParseError("checkpoint: bad parameter count");
  std::vector<double> flat(count);
  for (std::size_t i = 0; i < count; ++i)
    if (!(is >> flat[i])) throw ParseError("checkpoint: truncated parameters at index " + std::to_string(i));

  if (widths.size() < 2) throw ParseError("checkpoint: need at least two widths");
  Parameters p;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    p.layers.push_back({Eigen::MatrixXd::Zero(widths[l + 1], widths[l]), Eigen::VectorXd::Zero(widths[l + 1])});
  p.unflatten(flat);
  return MlpDiscriminator(widths, Activation::parse(act_name, slope), std::move(p), seed);
}

}  // namespace lipgan
