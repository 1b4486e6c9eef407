#include "olab/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace olab {

std::string_view to_string(AlgorithmKind kind) noexcept {
  switch (kind) {
    case AlgorithmKind::SyncSGD: return "sync_sgd";
    case AlgorithmKind::LocalSGD: return "local_sgd";
    case AlgorithmKind::OverlapLocal: return "overlap_local";
    case AlgorithmKind::OverlapLocalMomentum: return "overlap_local_momentum";
    case AlgorithmKind::CoCoD: return "cocod";
    case AlgorithmKind::EASGD: return "easgd";
  }
  return "unknown";
}

AlgorithmKind parse_algorithm(std::string_view name) {
  for (auto kind : {AlgorithmKind::SyncSGD, AlgorithmKind::LocalSGD, AlgorithmKind::OverlapLocal,
                    AlgorithmKind::OverlapLocalMomentum, AlgorithmKind::CoCoD, AlgorithmKind::EASGD}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("algorithm: unknown kind '" + std::string(name) + "'");
}

bool is_overlapped(AlgorithmKind kind) noexcept {
  return kind == AlgorithmKind::OverlapLocal || kind == AlgorithmKind::OverlapLocalMomentum ||
         kind == AlgorithmKind::CoCoD || kind == AlgorithmKind::EASGD;
}

void AlgorithmSpec::validate(std::size_t m, std::size_t tau) const {
  if (kind == AlgorithmKind::SyncSGD && tau != 1) throw ConfigError("tau: sync_sgd requires tau = 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha: must lie in [0, 1]");
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("beta: must lie in [0, 1)");
  if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError("mu: must lie in [0, 1)");
  if (kind == AlgorithmKind::EASGD) {
    if (!(alpha_e >= 0.0)) throw ConfigError("alpha_e: must be >= 0");
    if (alpha_e * static_cast<double>(m) > 1.0) throw ConfigError("alpha_e: alpha_e * m must not exceed 1");
  }
}

ClusterState ClusterState::initial(std::size_t m, const ParamVector& init) {
  if (m < 1) throw std::invalid_argument("ClusterState: m must be >= 1");
  require_finite(init, "initial point");
  ClusterState s;
  s.workers.assign(m, init);
  s.local_momenta.assign(m, ParamVector(init.size(), 0.0));
  s.anchor = init;
  s.anchor_momentum = ParamVector(init.size(), 0.0);
  s.round_start.assign(m, init);
  s.stale_average = init;
  return s;
}

void local_step(ClusterState& state, std::size_t worker, const ParamVector& g, double eta, double mu) {
  if (worker >= state.num_workers()) throw std::out_of_range("local_step: worker out of range");
  ParamVector& x = state.workers[worker];
  require_same_dim(x, g, "local_step");
  if (mu == 0.0) {
    axpy_inplace(-eta, g, x);
    return;
  }
  ParamVector& buf = state.local_momenta[worker];
  scale_inplace(mu, buf);
  axpy_inplace(1.0, g, buf);
  axpy_inplace(-eta, axpy(mu, buf, g), x);
}

void pullback(ClusterState& state, double alpha, double fault) {
  for (auto& x : state.workers) {
    scale_inplace(1.0 - alpha, x);
    axpy_inplace(alpha + fault, state.anchor, x);
  }
}

void anchor_average(ClusterState& state) { state.anchor = mean_of(state.workers); }

void anchor_momentum_update(ClusterState& state, double beta) {
  const ParamVector mean = mean_of(state.workers);
  const ParamVector drift = axpy(-1.0, state.anchor, mean);  // mean - z_old
  // z_new = z_old + (beta v + drift) = mean + beta v
  ParamVector next_anchor = axpy(beta, state.anchor_momentum, mean);
  state.anchor_momentum = axpy(beta, state.anchor_momentum, drift);
  state.anchor = std::move(next_anchor);
}

namespace {

bool workers_agree(const ClusterState& state) {
  for (std::size_t i = 1; i < state.num_workers(); ++i) {
    if (!(state.workers[i] == state.workers[0])) return false;
  }
  return true;
}

void average_workers(ClusterState& state) {
  const ParamVector mean = mean_of(state.workers);
  for (auto& x : state.workers) x = mean;
  state.anchor = mean;
}

void cocod_restart(ClusterState& state) {
  for (std::size_t i = 0; i < state.num_workers(); ++i) {
    const ParamVector delta = axpy(-1.0, state.round_start[i], state.workers[i]);
    state.workers[i] = axpy(1.0, delta, state.stale_average);
  }
  state.round_start = state.workers;
  state.stale_average = mean_of(state.round_start);
  state.anchor = state.stale_average;
}

void easgd_exchange(ClusterState& state, double alpha, double alpha_e) {
  const ParamVector mean_pre = mean_of(state.workers);
  const ParamVector drift = axpy(-1.0, state.anchor, mean_pre);  // mean_i (x_i - z)
  pullback(state, alpha);
  axpy_inplace(alpha_e, drift, state.anchor);
}

void reset_momenta(ClusterState& state) {
  for (auto& buf : state.local_momenta) buf = ParamVector(buf.size(), 0.0);
}

}  // namespace

void sync_sgd_step(ClusterState& state, double eta, std::span<const ParamVector> grads, double mu) {
  if (grads.size() != state.num_workers()) throw std::invalid_argument("sync_sgd_step: one gradient per worker");
  if (!workers_agree(state)) throw std::logic_error("sync_sgd_step: worker models differ on entry");
  for (std::size_t i = 0; i < grads.size(); ++i) local_step(state, i, grads[i], eta, mu);
  average_workers(state);
  ++state.step;
}

Trainer::Trainer(AlgorithmSpec spec, std::size_t m, std::size_t tau, double eta, const ParamVector& init)
    : spec_(spec), tau_(tau), eta_(eta), state_(ClusterState::initial(m, init)) {
  if (tau_ < 1) throw std::invalid_argument("Trainer: tau must be >= 1");
  if (!(eta_ > 0.0)) throw std::invalid_argument("Trainer: eta must be > 0");
  spec_.validate(m, tau_);
}

void Trainer::step(std::span<const ParamVector> grads) {
  if (grads.size() != state_.num_workers()) throw std::invalid_argument("Trainer::step: one gradient per worker");
  if (spec_.kind == AlgorithmKind::SyncSGD && !workers_agree(state_)) {
    throw std::logic_error("sync_sgd: worker models differ on entry");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) local_step(state_, i, grads[i], eta_, spec_.mu);
  if (is_sync_step()) sync();
  ++state_.step;
}

void Trainer::step(const GradientOracle& oracle) {
  std::vector<ParamVector> grads;
  grads.reserve(state_.num_workers());
  for (std::size_t i = 0; i < state_.num_workers(); ++i) grads.push_back(oracle(i, state_.workers[i]));
  step(grads);
}

void Trainer::sync() {
  switch (spec_.kind) {
    case AlgorithmKind::SyncSGD:
    case AlgorithmKind::LocalSGD:
      average_workers(state_);
      break;
    case AlgorithmKind::OverlapLocal:
      pullback(state_, spec_.alpha, spec_.pullback_fault);
      anchor_average(state_);
      break;
    case AlgorithmKind::OverlapLocalMomentum:
      pullback(state_, spec_.alpha, spec_.pullback_fault);
      anchor_momentum_update(state_, spec_.beta);
      break;
    case AlgorithmKind::CoCoD:
      cocod_restart(state_);
      break;
    case AlgorithmKind::EASGD:
      easgd_exchange(state_, spec_.alpha, spec_.alpha_e);
      break;
  }
  if (spec_.reset_local_momentum) reset_momenta(state_);
}

namespace {

void run_round(ClusterState& state, const AlgorithmSpec& spec, const GradientOracle& oracle, double eta,
               std::size_t tau) {
  // The round helpers assume they are called on a round boundary.
  const std::size_t start = state.step;
  Trainer t(spec, state.num_workers(), tau, eta, state.anchor);
  t.mutable_state() = std::move(state);
  t.mutable_state().step = 0;
  for (std::size_t s = 0; s < tau; ++s) t.step(oracle);
  state = std::move(t.mutable_state());
  state.step = start + tau;
}

}  // namespace

void local_sgd_round(ClusterState& state, const GradientOracle& oracle, double eta, std::size_t tau, double mu) {
  AlgorithmSpec spec;
  spec.kind = AlgorithmKind::LocalSGD;
  spec.mu = mu;
  run_round(state, spec, oracle, eta, tau);
}

void cocod_round(ClusterState& state, const GradientOracle& oracle, double eta, std::size_t tau, double mu) {
  AlgorithmSpec spec;
  spec.kind = AlgorithmKind::CoCoD;
  spec.mu = mu;
  run_round(state, spec, oracle, eta, tau);
}

void easgd_round(ClusterState& state, const GradientOracle& oracle, double eta, std::size_t tau, double alpha,
                 double alpha_e, double mu) {
  AlgorithmSpec spec;
  spec.kind = AlgorithmKind::EASGD;
  spec.alpha = alpha;
  spec.alpha_e = alpha_e;
  spec.mu = mu;
  spec.validate(state.num_workers(), tau);
  run_round(state, spec, oracle, eta, tau);
}

std::vector<double> virtual_weights(const AlgorithmSpec& spec, std::size_t m) {
  const double md = static_cast<double>(m);
  switch (spec.kind) {
    case AlgorithmKind::OverlapLocal:
    case AlgorithmKind::OverlapLocalMomentum:
      return fixed_vector(m, spec.alpha);
    case AlgorithmKind::EASGD: {
      const double total = spec.alpha + spec.alpha_e;
      if (total > 0.0) {
        std::vector<double> v(m + 1, spec.alpha_e / (md * total));
        v[m] = spec.alpha / total;
        return v;
      }
      break;
    }
    default:
      break;
  }
  std::vector<double> v(m + 1, 1.0 / md);
  v[m] = 0.0;
  return v;
}

ParamVector virtual_point(const ClusterState& state, std::span<const double> weights) {
  const std::size_t m = state.num_workers();
  if (weights.size() != m + 1) throw DimensionError("virtual_point: need m+1 weights");
  const bool uniform = std::all_of(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(m),
                                   [&](double w) { return w == weights[0]; });
  if (uniform) {
    // Through the shifted mean, so workers in consensus give y equal to their common value.
    const double worker_share = weights[0] * static_cast<double>(m);
    ParamVector y = mean_of(state.workers);
    if (worker_share != 1.0) scale_inplace(worker_share, y);
    if (weights[m] != 0.0) axpy_inplace(weights[m], state.anchor, y);
    return y;
  }
  ParamVector y(state.dim(), 0.0);
  for (std::size_t i = 0; i < m; ++i) axpy_inplace(weights[i], state.workers[i], y);
  axpy_inplace(weights[m], state.anchor, y);
  return y;
}

double consensus_distance(const ClusterState& state, const ParamVector& y) {
  double total = 0.0;
  for (const auto& x : state.workers) {
    require_same_dim(x, y, "consensus_distance");
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double r = x[j] - y[j];
      total += r * r;
    }
  }
  return total / static_cast<double>(state.num_workers());
}

StackedState stack(const ClusterState& state) {
  StackedState X;
  X.columns = state.workers;
  X.columns.push_back(state.anchor);
  return X;
}

TrainingSummary run_training(const AlgorithmSpec& spec, const HyperParams& hp, const Ensemble& ensemble,
                             const ParamVector& init, const MetricsSink& sink, const TrainingOptions& options) {
  if (!hp.eta) throw ConfigError("eta: must be resolved before training");
  if (ensemble.num_workers() != hp.m) throw ConfigError("m: does not match the objective's worker count");
  if (ensemble.dim() != hp.d || init.size() != hp.d) throw DimensionError("run_training: dimension mismatch");
  const std::size_t stride = std::max<std::size_t>(1, options.stride);

  Trainer trainer(spec, hp.m, hp.tau, *hp.eta, init);
  const RngStream root(hp.seed);
  std::vector<RngStream> noise;
  noise.reserve(hp.m);
  for (std::size_t i = 0; i < hp.m; ++i) noise.push_back(root.split(i, hp.m, "noise"));
  const GradientOracle oracle = [&](std::size_t i, const ParamVector& x) {
    return ensemble.stochastic_grad(i, x, noise[i]);
  };
  const std::vector<double> weights = virtual_weights(spec, hp.m);

  TrainingSummary summary;
  double grad_sum = 0.0;
  auto diverge = [&](std::size_t k, const std::string& why) {
    summary.status = RunStatus::Diverged;
    summary.steps_completed = k;
    summary.diagnostic = "diverged at step " + std::to_string(k) + ": " + why;
    summary.avg_grad_norm_sq = k > 0 ? grad_sum / static_cast<double>(k) : 0.0;
    return summary;
  };

  for (std::size_t k = 0; k < hp.K; ++k) {
    try {
      const ParamVector y = virtual_point(trainer.state(), weights);
      const double objective = ensemble.objective_value(y);
      if (!std::isfinite(objective) || objective > options.divergence_threshold) {
        return diverge(k, "objective " + std::to_string(objective) + " exceeds threshold");
      }
      const double gn = norm_sq(ensemble.global_grad(y));
      grad_sum += gn;
      if (k % stride == 0) {
        MetricsRecord rec;
        rec.k = k;
        rec.objective = objective;
        rec.grad_norm_sq = gn;
        rec.consensus_dist = consensus_distance(trainer.state(), y);
        if (options.timing) {
          const StepTiming t = options.timing(k);
          rec.wall_time_s = t.wall_time_s;
          rec.comm_bytes = t.comm_bytes;
          rec.idle_s = t.idle_s;
        }
        if (sink) sink(rec, trainer.state(), y);
      }
      trainer.step(oracle);
    } catch (const NonFiniteError& e) {
      return diverge(k, e.what());
    }
  }

  summary.steps_completed = hp.K;
  summary.avg_grad_norm_sq = grad_sum / static_cast<double>(hp.K);
  try {
    const ParamVector y = virtual_point(trainer.state(), weights);
    summary.final_objective = ensemble.objective_value(y);
    summary.final_grad_norm_sq = norm_sq(ensemble.global_grad(y));
    if (!std::isfinite(summary.final_objective) || summary.final_objective > options.divergence_threshold) {
      return diverge(hp.K, "final objective exceeds threshold");
    }
  } catch (const NonFiniteError& e) {
    return diverge(hp.K, e.what());
  }
  return summary;
}

}  // namespace olab
