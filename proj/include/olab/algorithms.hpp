#pragma once

// Per-worker update rules for synchronous SGD, Local SGD, Overlap-Local-SGD
// (vanilla and anchor-momentum), CoCoD-SGD and an EASGD-style baseline, plus the
// training driver that runs one of them for K logical iterations.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "olab/core.hpp"
#include "olab/mixing.hpp"
#include "olab/objectives.hpp"

namespace olab {

enum class AlgorithmKind { SyncSGD, LocalSGD, OverlapLocal, OverlapLocalMomentum, CoCoD, EASGD };

std::string_view to_string(AlgorithmKind kind) noexcept;
/// Accepts the snake_case names used in configs ("overlap_local", "cocod", ...).
AlgorithmKind parse_algorithm(std::string_view name);
/// True for kinds whose synchronization runs concurrently with the next round.
bool is_overlapped(AlgorithmKind kind) noexcept;

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::OverlapLocal;
  double alpha = 0.6;    // pullback strength (overlap kinds, EASGD)
  double beta = 0.7;     // anchor momentum (OverlapLocalMomentum)
  double mu = 0.0;       // local Nesterov momentum, all kinds
  double alpha_e = 0.0;  // EASGD anchor step
  bool reset_local_momentum = false;
  // Verification only: added to alpha on the anchor side of the pullback.
  double pullback_fault = 0.0;

  void validate(std::size_t m, std::size_t tau) const;
};

struct ClusterState {
  std::vector<ParamVector> workers;
  std::vector<ParamVector> local_momenta;
  ParamVector anchor;
  ParamVector anchor_momentum;
  // CoCoD bookkeeping: start point of the current round and the in-flight
  // average of those start points.
  std::vector<ParamVector> round_start;
  ParamVector stale_average;
  std::size_t step = 0;

  /// Every worker, the anchor and the CoCoD snapshots at init; momenta zero.
  static ClusterState initial(std::size_t m, const ParamVector& init);

  std::size_t num_workers() const noexcept { return workers.size(); }
  std::size_t dim() const noexcept { return anchor.size(); }
};

/// x <- x - eta g, or with mu > 0 the Nesterov form
/// buf <- mu buf + g; x <- x - eta (g + mu buf).
void local_step(ClusterState& state, std::size_t worker, const ParamVector& g, double eta, double mu = 0.0);

/// x_i <- (1 - alpha) x_i + alpha z, reading the anchor left by the previous sync.
void pullback(ClusterState& state, double alpha, double fault = 0.0);

/// z <- mean_i x_i
void anchor_average(ClusterState& state);

/// v <- beta v + (mean_i x_i - z); z <- z + v.
void anchor_momentum_update(ClusterState& state, double beta);

/// One fully synchronous step from a common iterate: every worker and the anchor
/// move to x - eta * mean(g), evaluated as the mean of the per-worker one-step models.
/// Throws std::logic_error if the workers disagree on entry.
void sync_sgd_step(ClusterState& state, double eta, std::span<const ParamVector> grads, double mu = 0.0);

using GradientOracle = std::function<ParamVector(std::size_t worker, const ParamVector& x)>;

/// tau local steps per worker, then every worker is replaced by the average.
void local_sgd_round(ClusterState& state, const GradientOracle& oracle, double eta, std::size_t tau,
                     double mu = 0.0);

/// tau local steps; each worker then restarts from the stale average of the
/// previous round's start points plus its own accumulated update.
void cocod_round(ClusterState& state, const GradientOracle& oracle, double eta, std::size_t tau,
                 double mu = 0.0);

/// tau local steps; x_i <- x_i - alpha (x_i - z) and z <- z + alpha_e mean_i(x_i - z)
/// using the pre-pullback models. Rejects alpha_e * m > 1.
void easgd_round(ClusterState& state, const GradientOracle& oracle, double eta, std::size_t tau, double alpha,
                 double alpha_e, double mu = 0.0);

/// Weights v with y = sum_i v_i x_i + v_{m} z for the kind's virtual sequence.
std::vector<double> virtual_weights(const AlgorithmSpec& spec, std::size_t m);

ParamVector virtual_point(const ClusterState& state, std::span<const double> weights);

/// (1/m) sum_i ||x_i - y||^2
double consensus_distance(const ClusterState& state, const ParamVector& y);

StackedState stack(const ClusterState& state);

/// Step-level driver shared by the round helpers and run_training. One call to
/// step() is one logical iteration: a local step on every worker, then the
/// kind's sync action when (k+1) mod tau == 0 (pullback before anchor update).
class Trainer {
 public:
  Trainer(AlgorithmSpec spec, std::size_t m, std::size_t tau, double eta, const ParamVector& init);

  void step(std::span<const ParamVector> grads);
  void step(const GradientOracle& oracle);

  bool is_sync_step() const noexcept { return (state_.step + 1) % tau_ == 0; }
  const ClusterState& state() const noexcept { return state_; }
  ClusterState& mutable_state() noexcept { return state_; }
  const AlgorithmSpec& spec() const noexcept { return spec_; }
  std::size_t tau() const noexcept { return tau_; }
  double eta() const noexcept { return eta_; }

 private:
  void sync();

  AlgorithmSpec spec_;
  std::size_t tau_;
  double eta_;
  ClusterState state_;
};

struct MetricsRecord {
  std::size_t k = 0;
  double wall_time_s = 0.0;
  double objective = 0.0;       // F(y_k)
  double grad_norm_sq = 0.0;    // ||grad F(y_k)||^2
  double consensus_dist = 0.0;  // (1/m) sum ||x_i - y_k||^2
  double comm_bytes = 0.0;
  double idle_s = 0.0;
};

struct StepTiming {
  double wall_time_s = 0.0;
  double comm_bytes = 0.0;
  double idle_s = 0.0;
};

using TimingLookup = std::function<StepTiming(std::size_t k)>;
/// Receives each emitted record with the state *before* step k and its y_k.
using MetricsSink = std::function<void(const MetricsRecord&, const ClusterState&, const ParamVector&)>;

struct TrainingOptions {
  std::size_t stride = 1;
  TimingLookup timing;  // optional; zeros when empty
  double divergence_threshold = 1e12;
};

enum class RunStatus { Ok, Diverged };

struct TrainingSummary {
  RunStatus status = RunStatus::Ok;
  std::size_t steps_completed = 0;
  double final_objective = 0.0;
  double final_grad_norm_sq = 0.0;
  /// (1/K) sum_{k<K} ||grad F(y_k)||^2 over every step, independent of stride.
  double avg_grad_norm_sq = 0.0;
  std::string diagnostic;
};

/// Runs hp.K logical iterations from init with per-worker noise streams
/// split from hp.seed. hp.eta must be resolved. Deterministic given hp.seed.
TrainingSummary run_training(const AlgorithmSpec& spec, const HyperParams& hp, const Ensemble& ensemble,
                             const ParamVector& init, const MetricsSink& sink, const TrainingOptions& options = {});

}  // namespace olab
