#pragma once

// Adversarial loop with a particle generator: the discriminator is warm-started
// and trained for a few Adam steps on J_D plus a Lipschitz penalty, then every
// particle moves along +grad_x f (generator loss psi(x) = -x).

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lipgan/error.hpp"
#include "lipgan/geometry.hpp"
#include "lipgan/lipschitz.hpp"
#include "lipgan/mlp.hpp"
#include "lipgan/objectives.hpp"
#include "lipgan/transport.hpp"

namespace lipgan {

struct MetricsRow {
  std::size_t iteration = 0;
  double w1 = 0.0;
  double mean_f_pg = 0.0;
  double mean_f_pr = 0.0;
  double k_emp = 0.0;
  double j_d = 0.0;
};

struct TrainConfig {
  std::size_t d_steps = 50;
  double eta = 0.05;
  std::size_t outer_iterations = 500;
  AdamConfig adam;
  PenaltyConfig penalty;
  ObjectiveSpec objective = builtin_objective("linear");
  std::size_t metric_probes = 256;  // blend probes for the recorded k_emp

  void validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("training.eta must be non-negative");
    if (!(adam.lr > 0.0)) throw InvalidArgument("training.lr must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw InvalidArgument("training.beta1 must be in [0, 1)");
    if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw InvalidArgument("training.beta2 must be in [0, 1)");
    if (metric_probes < 1) throw InvalidArgument("training.metric_probes must be positive");
    penalty.validate();
  }

  // Fresh blend points drawn per maxgp step; S_max fills the rest of the batch.
  std::size_t maxgp_fresh() const {
    return penalty.blend_batch > penalty.smax_capacity ? penalty.blend_batch - penalty.smax_capacity : 1;
  }
};

struct FlowState {
  std::size_t iteration = 0;
  PointCloud particles;
  PointCloud target;
  MlpDiscriminator net;
  AdamState adam;
  SmaxList smax;
  std::vector<MetricsRow> history;

  FlowState(PointCloud particles_, PointCloud target_, MlpDiscriminator net_, std::size_t smax_capacity)
      : particles(std::move(particles_)),
        target(std::move(target_)),
        net(std::move(net_)),
        adam(AdamState::for_net(net)),
        smax(smax_capacity) {
    if (particles.dim() != target.dim())
      throw DimensionMismatch(static_cast<std::size_t>(target.dim()), static_cast<std::size_t>(particles.dim()));
    if (net.input_dim() != particles.dim())
      throw DimensionMismatch(static_cast<std::size_t>(net.input_dim()), static_cast<std::size_t>(particles.dim()));
  }
};

namespace detail {

struct CriticBatch {
  Tape tape;
  std::size_t n_pg = 0;
};

inline CriticBatch critic_batch(const MlpDiscriminator& net, const PointCloud& pg, const PointCloud& pr) {
  if (pg.dim() != pr.dim()) throw DimensionMismatch(pg.dim(), pr.dim());
  std::vector<Point> all = pg.points();
  all.insert(all.end(), pr.points().begin(), pr.points().end());
  return {forward_tape(net, stack_points(all, net.input_dim())), pg.size()};
}

inline double weighted_loss(const ObjectiveSpec& obj, const PointCloud& pg, const PointCloud& pr,
                            const Eigen::RowVectorXd& f) {
  double j = 0.0;
  for (std::size_t i = 0; i < pg.size(); ++i) j += pg.weight(i) * obj.phi(f[static_cast<Eigen::Index>(i)]);
  for (std::size_t i = 0; i < pr.size(); ++i)
    j += pr.weight(i) * obj.varphi(f[static_cast<Eigen::Index>(pg.size() + i)]);
  return j;
}

inline MetricsRow measure(const FlowState& s, const ObjectiveSpec& obj, std::size_t probes) {
  MetricsRow row;
  row.iteration = s.iteration;
  row.w1 = w1(s.target, s.particles);
  const CriticBatch b = critic_batch(s.net, s.particles, s.target);
  for (std::size_t i = 0; i < s.particles.size(); ++i)
    row.mean_f_pg += s.particles.weight(i) * b.tape.output[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < s.target.size(); ++i)
    row.mean_f_pr += s.target.weight(i) * b.tape.output[static_cast<Eigen::Index>(b.n_pg + i)];
  row.j_d = weighted_loss(obj, s.particles, s.target, b.tape.output);
  // A dedicated stream so recording metrics never perturbs training.
  Rng probe_rng(0x6D657472696373ULL + s.iteration);
  row.k_emp = estimate_k(s.net, s.particles, s.target, probes, probe_rng);
  return row;
}

}  // namespace detail

/// J_D = sum_pg w phi(f(x)) + sum_pr w varphi(f(y)).
inline double d_loss(const MlpDiscriminator& net, const ObjectiveSpec& obj, const PointCloud& pg,
                     const PointCloud& pr) {
  const auto b = detail::critic_batch(net, pg, pr);
  return detail::weighted_loss(obj, pg, pr, b.tape.output);
}

/// J_D and its parameter gradient.
inline std::pair<double, Parameters> d_loss_with_grads(const MlpDiscriminator& net, const ObjectiveSpec& obj,
                                                       const PointCloud& pg, const PointCloud& pr) {
  const auto b = detail::critic_batch(net, pg, pr);
  const Eigen::RowVectorXd& f = b.tape.output;
  Eigen::RowVectorXd up(f.size());
  for (std::size_t i = 0; i < pg.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    up[k] = pg.weight(i) * obj.phi_d1(f[k]);
  }
  for (std::size_t i = 0; i < pr.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(pg.size() + i);
    up[k] = pr.weight(i) * obj.varphi_d1(f[k]);
  }
  Parameters g = Parameters::zeros_like(net.params());
  accumulate_param_grads(net, b.tape, up, g);
  return {detail::weighted_loss(obj, pg, pr, f), std::move(g)};
}

/// cfg.d_steps Adam steps on J_D + penalty, warm-started from the state's net.
inline FlowState train_discriminator(FlowState state, const TrainConfig& cfg, Rng& rng) {
  const PenaltyConfig& pc = cfg.penalty;
  for (std::size_t step = 0; step < cfg.d_steps; ++step) {
    auto [loss, grads] = d_loss_with_grads(state.net, cfg.objective, state.particles, state.target);
    switch (pc.kind) {
      case PenaltyKind::gp: {
        auto p = grad_penalty(state.net, blend_sample(state.particles, state.target, pc.blend_batch, rng), pc.k0);
        loss += pc.lambda * p.loss;
        grads += pc.lambda * p.grads;
        break;
      }
      case PenaltyKind::lp: {
        auto p = lp_penalty(state.net, blend_sample(state.particles, state.target, pc.blend_batch, rng));
        loss += pc.lambda * p.loss;
        grads += pc.lambda * p.grads;
        break;
      }
      case PenaltyKind::maxgp: {
        auto p = maxgp_penalty(state.net, blend_sample(state.particles, state.target, cfg.maxgp_fresh(), rng),
                               state.smax, pc.k0);
        loss += pc.lambda * p.loss;
        grads += pc.lambda * p.grads;
        state.smax = std::move(p.smax);
        break;
      }
      case PenaltyKind::ksq: {
        auto p = ksq_penalty(state.net, state.particles, state.target, pc.blend_batch, pc.lambda, rng, pc.k0);
        loss += p.loss;
        grads += p.grads;
        break;
      }
    }
    if (!std::isfinite(loss) || !grads.all_finite())
      throw NumericalError("non-finite discriminator loss at outer iteration " + std::to_string(state.iteration) +
                           ", inner step " + std::to_string(step));
    adam_step(state.net, grads, state.adam, cfg.adam);
  }
  return state;
}

/// x <- x + eta * grad_x f(x) for every particle, then a new metrics row.
inline FlowState particle_step(FlowState state, const TrainConfig& cfg) {
  if (cfg.eta != 0.0) {
    const auto grads = grad_input_batch(state.net, state.particles.points());
    std::vector<Point> moved = state.particles.points();
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += cfg.eta * grads[i];
    state.particles = state.particles.with_points(std::move(moved));
  }
  ++state.iteration;
  state.history.push_back(detail::measure(state, cfg.objective, cfg.metric_probes));
  return state;
}

using FlowObserver = std::function<void(const FlowState&)>;

/// Records initial metrics, then alternates discriminator training and
/// particle steps. The observer sees the initial state and every step.
inline FlowState run(FlowState state, const TrainConfig& cfg, Rng& rng, const FlowObserver& observer = {}) {
  cfg.validate();
  if (state.history.empty() || state.history.back().iteration != state.iteration)
    state.history.push_back(detail::measure(state, cfg.objective, cfg.metric_probes));
  if (observer) observer(state);
  for (std::size_t it = 0; it < cfg.outer_iterations; ++it) {
    state = train_discriminator(std::move(state), cfg, rng);
    state = particle_step(std::move(state), cfg);
    if (observer) observer(state);
  }
  return state;
}

struct Lattice {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;
  std::size_t nx = 50, ny = 50;

  double x(std::size_t i) const { return nx == 1 ? x_min : x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(nx - 1); }
  double y(std::size_t j) const { return ny == 1 ? y_min : y_min + (y_max - y_min) * static_cast<double>(j) / static_cast<double>(ny - 1); }
};

/// f on the lattice; entry (j, i) is f(x_i, y_j).
inline Eigen::MatrixXd value_surface(const MlpDiscriminator& net, const Lattice& grid) {
  if (net.input_dim() != 2) throw InvalidArgument("value_surface: network input must be 2-D, got " + std::to_string(net.input_dim()));
  if (grid.nx < 1 || grid.ny < 1) throw InvalidArgument("value_surface: lattice must have at least one node per axis");
  Eigen::MatrixXd X(2, static_cast<Eigen::Index>(grid.nx * grid.ny));
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const auto c = static_cast<Eigen::Index>(j * grid.nx + i);
      X(0, c) = grid.x(i);
      X(1, c) = grid.y(j);
    }
  const Tape t = forward_tape(net, X);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.ny), static_cast<Eigen::Index>(grid.nx));
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i)
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = t.output[static_cast<Eigen::Index>(j * grid.nx + i)];
  return out;
}

}  // namespace lipgan
