#pragma once

// Lipschitz regularizers evaluated on the blend region between the fake and
// real clouds. Every penalty returns its loss and the parameter gradient of
// that loss (through the input-gradient, i.e. second order).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"
#include "lipgan/mlp.hpp"

namespace lipgan {

enum class PenaltyKind { gp, lp, maxgp, ksq };

inline const char* to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::gp: return "gp";
    case PenaltyKind::lp: return "lp";
    case PenaltyKind::maxgp: return "maxgp";
    case PenaltyKind::ksq: return "ksq";
  }
  return "?";
}

inline PenaltyKind parse_penalty_kind(const std::string& s) {
  if (s == "gp") return PenaltyKind::gp;
  if (s == "lp") return PenaltyKind::lp;
  if (s == "maxgp") return PenaltyKind::maxgp;
  if (s == "ksq") return PenaltyKind::ksq;
  throw InvalidArgument("unknown penalty kind '" + s + "'; valid options: gp, lp, maxgp, ksq");
}

struct PenaltyConfig {
  PenaltyKind kind = PenaltyKind::maxgp;
  double lambda = 10.0;
  double k0 = 0.0;                 // target Lipschitz constant
  std::size_t blend_batch = 64;    // fresh blend points per step (probes for ksq)
  std::size_t smax_capacity = 32;  // maxgp only; half the blend batch by default

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("penalty.lambda must be positive");
    if (!(k0 >= 0.0)) throw InvalidArgument("penalty.k0 must be non-negative");
    if (blend_batch < 1) throw InvalidArgument("penalty.blend_batch must be positive");
    if (smax_capacity < 1) throw InvalidArgument("penalty.smax_capacity must be positive");
    if (smax_capacity > 2 * blend_batch) throw InvalidArgument("penalty.smax_capacity must be <= 2 * blend_batch");
  }
};

struct PenaltyResult {
  double loss = 0.0;
  Parameters grads;
};

/// Blend points with the largest input-gradient norms seen so far, sorted by
/// descending cached norm.
class SmaxList {
 public:
  struct Entry {
    Point x;
    double norm;
  };

  explicit SmaxList(std::size_t capacity = 1) : capacity_(capacity) {
    if (capacity_ < 1) throw InvalidArgument("S_max capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  void assign(std::vector<Entry> entries) {
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.norm > b.norm; });
    if (entries.size() > capacity_) entries.resize(capacity_);
    entries_ = std::move(entries);
  }

  bool invariants_hold() const {
    if (entries_.size() > capacity_) return false;
    for (std::size_t i = 1; i < entries_.size(); ++i)
      if (entries_[i - 1].norm < entries_[i].norm) return false;
    return true;
  }

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;
};

namespace detail {

struct GradBatch {
  Tape tape;
  Eigen::MatrixXd grads;   // dim x batch
  Eigen::VectorXd norms;   // batch
};

inline GradBatch input_grad_batch(const MlpDiscriminator& net, const std::vector<Point>& xs) {
  GradBatch b;
  b.tape = forward_tape(net, stack_points(xs, net.input_dim()));
  b.grads = input_gradients(net, b.tape);
  b.norms = b.grads.colwise().norm().transpose();
  return b;
}

// d/dg of (||g|| - k0)^2, column-wise.
inline Eigen::VectorXd centered_sq_grad(const Eigen::VectorXd& g, double k0) {
  if (k0 == 0.0) return 2.0 * g;
  const double n = g.norm();
  if (n == 0.0) return Eigen::VectorXd::Zero(g.size());
  return 2.0 * (n - k0) / n * g;
}

}  // namespace detail

/// mean over blend of (||grad_x f|| - k0)^2 (k0 = 0: the plain squared norm).
inline PenaltyResult grad_penalty(const MlpDiscriminator& net, const std::vector<Point>& blend, double k0 = 0.0) {
  if (blend.empty()) throw InvalidArgument("grad_penalty: blend must not be empty");
  auto b = detail::input_grad_batch(net, blend);
  const double n = static_cast<double>(blend.size());
  PenaltyResult r;
  r.grads = Parameters::zeros_like(net.params());
  Eigen::MatrixXd gbar(b.grads.rows(), b.grads.cols());
  for (Eigen::Index i = 0; i < b.grads.cols(); ++i) {
    const double dev = b.norms[i] - k0;
    r.loss += dev * dev;
    gbar.col(i) = detail::centered_sq_grad(b.grads.col(i), k0) / n;
  }
  r.loss /= n;
  accumulate_input_grad_param_grads(net, b.tape, gbar, r.grads);
  return r;
}

/// One-sided: mean over blend of max(0, ||grad_x f|| - 1)^2.
inline PenaltyResult lp_penalty(const MlpDiscriminator& net, const std::vector<Point>& blend) {
  if (blend.empty()) throw InvalidArgument("lp_penalty: blend must not be empty");
  auto b = detail::input_grad_batch(net, blend);
  const double n = static_cast<double>(blend.size());
  PenaltyResult r;
  r.grads = Parameters::zeros_like(net.params());
  Eigen::MatrixXd gbar = Eigen::MatrixXd::Zero(b.grads.rows(), b.grads.cols());
  for (Eigen::Index i = 0; i < b.grads.cols(); ++i) {
    const double excess = b.norms[i] - 1.0;
    if (excess <= 0.0) continue;
    r.loss += excess * excess;
    gbar.col(i) = 2.0 * excess / b.norms[i] * b.grads.col(i) / n;
  }
  r.loss /= n;
  accumulate_input_grad_param_grads(net, b.tape, gbar, r.grads);
  return r;
}

struct MaxGpResult {
  double loss = 0.0;
  Parameters grads;
  SmaxList smax;
};

/// Evaluates S_max entries and the fresh blend points under the current net,
/// keeps the top-m by gradient norm (m = S_max capacity, ties to the earlier
/// batch position) and penalizes the mean of their (||g|| - k0)^2. Gradients
/// flow only through the selected points; S_max becomes the selection.
inline MaxGpResult maxgp_penalty(const MlpDiscriminator& net, const std::vector<Point>& fresh_blend,
                                 const SmaxList& smax, double k0 = 0.0) {
  if (fresh_blend.empty()) throw InvalidArgument("maxgp_penalty: fresh blend must not be empty");
  std::vector<Point> batch;
  batch.reserve(smax.size() + fresh_blend.size());
  for (const auto& e : smax.entries()) batch.push_back(e.x);
  batch.insert(batch.end(), fresh_blend.begin(), fresh_blend.end());

  // Norms are always recomputed with the current net before selection.
  auto b = detail::input_grad_batch(net, batch);
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return b.norms[static_cast<Eigen::Index>(i)] > b.norms[static_cast<Eigen::Index>(j)];
  });
  const std::size_t m = std::min(smax.capacity(), batch.size());

  MaxGpResult r;
  r.grads = Parameters::zeros_like(net.params());
  r.smax = SmaxList(smax.capacity());
  Eigen::MatrixXd gbar = Eigen::MatrixXd::Zero(b.grads.rows(), b.grads.cols());
  std::vector<SmaxList::Entry> kept;
  kept.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    const auto i = static_cast<Eigen::Index>(order[s]);
    const double dev = b.norms[i] - k0;
    r.loss += dev * dev;
    gbar.col(i) = detail::centered_sq_grad(b.grads.col(i), k0) / static_cast<double>(m);
    kept.push_back({batch[order[s]], b.norms[i]});
  }
  r.loss /= static_cast<double>(m);
  accumulate_input_grad_param_grads(net, b.tape, gbar, r.grads);
  r.smax.assign(std::move(kept));
  return r;
}

struct KEstimate {
  double k = 0.0;
  Point argmax;              // probe attaining the max (lowest index on ties)
  std::size_t argmax_index = 0;
};

/// max over `probes` blend points of ||grad_x f||: a lower bound on the
/// Lipschitz constant over the blend region.
inline KEstimate estimate_k_detailed(const MlpDiscriminator& net, const PointCloud& pg, const PointCloud& pr,
                                     std::size_t probes, Rng& rng) {
  if (probes < 1) throw InvalidArgument("estimate_k: probes must be >= 1");
  const auto pts = blend_sample(pg, pr, probes, rng);
  const auto grads = grad_input_batch(net, pts);
  KEstimate out;
  out.k = -1.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double n = grads[i].norm();
    if (n > out.k) {
      out.k = n;
      out.argmax_index = i;
    }
  }
  out.argmax = pts[out.argmax_index];
  return out;
}

inline double estimate_k(const MlpDiscriminator& net, const PointCloud& pg, const PointCloud& pr,
                         std::size_t probes, Rng& rng) {
  return estimate_k_detailed(net, pg, pr, probes, rng).k;
}

/// lambda * (k - k0)^2 with k from estimate_k; the gradient flows through the
/// single argmax probe.
inline PenaltyResult ksq_penalty(const MlpDiscriminator& net, const PointCloud& pg, const PointCloud& pr,
                                 std::size_t probes, double lambda, Rng& rng, double k0 = 0.0) {
  if (!(lambda > 0.0)) throw InvalidArgument("penalty.lambda must be positive");
  const KEstimate est = estimate_k_detailed(net, pg, pr, probes, rng);
  PenaltyResult r;
  r.grads = Parameters::zeros_like(net.params());
  const double dev = est.k - k0;
  r.loss = lambda * dev * dev;
  Tape t = forward_tape(net, est.argmax);
  const Eigen::MatrixXd g = input_gradients(net, t);
  const Eigen::MatrixXd gbar = lambda * detail::centered_sq_grad(g.col(0), k0);
  accumulate_input_grad_param_grads(net, t, gbar, r.grads);
  return r;
}

}  // namespace lipgan
