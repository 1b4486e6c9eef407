#pragma once

// Logical-time model of per-round compute and communication. Blocking kinds
// (SyncSGD, LocalSGD) put every collective on the critical path; overlapped
// kinds run the collective for round r while round r+1 computes, and a worker
// only waits if the anchor it needs at its next pullback is still in flight.

#include <cstddef>
#include <vector>

#include "olab/algorithms.hpp"
#include "olab/core.hpp"

namespace olab {

struct TimingModel {
  double compute_mean = 1.0;      // seconds per local step
  double compute_jitter = 0.0;    // relative std of a round's compute time
  double straggler_prob = 0.0;    // per worker-round
  double straggler_factor = 1.0;  // slowdown when a straggler event fires
  double latency = 0.0;           // seconds per collective
  double bandwidth = 0.0;         // bytes per second; 0 means unlimited
  double payload_bytes = 0.0;     // bytes moved per synchronization

  double comm_time() const noexcept;
  void validate() const;
};

/// Per-step compute seconds, seconds[worker][step].
struct ComputeTrace {
  std::vector<std::vector<double>> seconds;

  std::size_t num_workers() const noexcept { return seconds.size(); }
  std::size_t num_steps() const noexcept { return seconds.empty() ? 0 : seconds.front().size(); }
};

/// Per worker: tau * compute_mean * (1 + jitter) * (straggler_factor if a
/// Bernoulli(straggler_prob) fires); the jitter draw is truncated below at -0.9.
std::vector<double> sample_round_compute(const TimingModel& timing, std::size_t tau, std::size_t m, RngStream& rng);

/// rounds * tau steps; each round's draw is spread evenly over its tau steps so
/// that schedules with different sync periods can share the same draws.
ComputeTrace sample_trace(const TimingModel& timing, std::size_t tau, std::size_t rounds, std::size_t m,
                          const RngStream& rng);

struct RoundTiming {
  std::vector<double> start;           // per worker, when its compute for this round began
  std::vector<double> compute_finish;  // per worker
  std::vector<double> idle;            // per worker, all waiting attributed to this round
  std::vector<double> sync_idle;       // per worker, waiting on a collective that was still running
  double sync_start = 0.0;
  double sync_finish = 0.0;
  double completed = 0.0;  // when every worker may start the next round
  double wall_clock = 0.0;  // cumulative, non-decreasing
  bool has_sync = true;     // false only for a partial final round
  double syncs_before = 0.0;  // collectives launched in earlier rounds
  double idle_before = 0.0;   // idle (summed over workers) in earlier rounds
};

struct ScheduleSummary {
  AlgorithmKind kind = AlgorithmKind::LocalSGD;
  std::size_t tau = 1;
  std::size_t m = 0;
  double comm_time = 0.0;
  double payload_bytes = 0.0;
  std::vector<RoundTiming> rounds;
  double total_wall_clock = 0.0;
  double total_idle = 0.0;       // summed over workers and rounds
  double total_sync_idle = 0.0;  // the part spent waiting on a collective
  double critical_compute = 0.0;
  double critical_comm = 0.0;  // blocking comm, or pullback waits on the critical worker
};

/// Event-driven schedule for the given per-step trace, grouped into rounds of tau steps.
ScheduleSummary simulate(AlgorithmKind kind, const TimingModel& timing, const ComputeTrace& trace, std::size_t tau);

/// Samples a fresh trace for rounds * tau steps and simulates it.
ScheduleSummary simulate(AlgorithmKind kind, const TimingModel& timing, std::size_t rounds, std::size_t tau,
                         std::size_t m, const RngStream& rng);

/// Critical-path communication seconds divided by critical-path compute seconds.
double comm_compute_ratio(const ScheduleSummary& summary);

/// Wall clock, cumulative bytes and cumulative idle as seen after step k.
StepTiming timing_at_step(const ScheduleSummary& summary, const ComputeTrace& trace, std::size_t k);

}  // namespace olab
