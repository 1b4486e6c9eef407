#include "olab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace olab {

double TimingModel::comm_time() const noexcept {
  return latency + (bandwidth > 0.0 ? payload_bytes / bandwidth : 0.0);
}

void TimingModel::validate() const {
  if (!(compute_mean >= 0.0)) throw ConfigError("timing.compute_mean: must be >= 0");
  if (!(compute_jitter >= 0.0)) throw ConfigError("timing.compute_jitter: must be >= 0");
  if (!(straggler_prob >= 0.0 && straggler_prob <= 1.0)) throw ConfigError("timing.straggler_prob: must lie in [0, 1]");
  if (!(straggler_factor >= 1.0)) throw ConfigError("timing.straggler_factor: must be >= 1");
  if (!(latency >= 0.0)) throw ConfigError("timing.latency: must be >= 0");
  if (!(bandwidth >= 0.0)) throw ConfigError("timing.bandwidth: must be >= 0");
  if (!(payload_bytes >= 0.0)) throw ConfigError("timing.payload_bytes: must be >= 0");
}

std::vector<double> sample_round_compute(const TimingModel& timing, std::size_t tau, std::size_t m, RngStream& rng) {
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double jitter = std::max(-0.9, timing.compute_jitter * rng.normal());
    const bool straggles = rng.bernoulli(timing.straggler_prob);
    out[i] = static_cast<double>(tau) * timing.compute_mean * (1.0 + jitter) *
             (straggles ? timing.straggler_factor : 1.0);
  }
  return out;
}

ComputeTrace sample_trace(const TimingModel& timing, std::size_t tau, std::size_t rounds, std::size_t m,
                          const RngStream& rng) {
  if (tau < 1) throw std::invalid_argument("sample_trace: tau must be >= 1");
  RngStream r = rng.derive("timing");
  ComputeTrace trace;
  trace.seconds.assign(m, std::vector<double>(rounds * tau));
  for (std::size_t round = 0; round < rounds; ++round) {
    const std::vector<double> per_worker = sample_round_compute(timing, tau, m, r);
    for (std::size_t i = 0; i < m; ++i) {
      const double per_step = per_worker[i] / static_cast<double>(tau);
      for (std::size_t s = 0; s < tau; ++s) trace.seconds[i][round * tau + s] = per_step;
    }
  }
  return trace;
}

namespace {

enum class EventType { SyncDone = 0, ComputeDone = 1 };

struct Event {
  double time;
  EventType type;
  std::size_t round;
  std::size_t worker;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.type != b.type) return a.type > b.type;
    if (a.round != b.round) return a.round > b.round;
    return a.worker > b.worker;
  }
};

class EventLoop {
 public:
  EventLoop(AlgorithmKind kind, const TimingModel& timing, const ComputeTrace& trace, std::size_t tau)
      : overlapped_(is_overlapped(kind)), m_(trace.num_workers()), comm_(timing.comm_time()) {
    const std::size_t steps = trace.num_steps();
    num_rounds_ = (steps + tau - 1) / tau;
    compute_.assign(num_rounds_, std::vector<double>(m_, 0.0));
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t k = 0; k < steps; ++k) compute_[k / tau][i] += trace.seconds[i][k];
    }
    summary_.kind = kind;
    summary_.tau = tau;
    summary_.m = m_;
    summary_.comm_time = comm_;
    summary_.payload_bytes = timing.payload_bytes;
    summary_.rounds.resize(num_rounds_);
    for (std::size_t r = 0; r < num_rounds_; ++r) {
      auto& rt = summary_.rounds[r];
      rt.start.assign(m_, 0.0);
      rt.compute_finish.assign(m_, 0.0);
      rt.idle.assign(m_, 0.0);
      rt.sync_idle.assign(m_, 0.0);
      rt.has_sync = (r + 1) * tau <= steps;
    }
    arrivals_.assign(num_rounds_, 0);
    arrival_time_.assign(num_rounds_, 0.0);
    sync_done_.assign(num_rounds_, std::numeric_limits<double>::quiet_NaN());
    waiting_.assign(m_, false);
    final_time_.assign(m_, 0.0);
  }

  ScheduleSummary run() {
    if (num_rounds_ == 0 || m_ == 0) return summary_;
    for (std::size_t i = 0; i < m_; ++i) start_round(i, 0, 0.0);
    while (!queue_.empty()) {
      const Event e = queue_.top();
      queue_.pop();
      if (e.type == EventType::ComputeDone) {
        on_compute_done(e);
      } else {
        on_sync_done(e);
      }
    }
    finish();
    return summary_;
  }

 private:
  void start_round(std::size_t worker, std::size_t round, double t) {
    summary_.rounds[round].start[worker] = t;
    queue_.push({t + compute_[round][worker], EventType::ComputeDone, round, worker});
  }

  void on_compute_done(const Event& e) {
    auto& rt = summary_.rounds[e.round];
    rt.compute_finish[e.worker] = e.time;
    if (!overlapped_) {
      arrive(e.round, e.time);
      return;
    }
    // A partial final round has no pullback; round 0 pulls back toward z_0.
    const bool needs_anchor = rt.has_sync && e.round >= 1;
    if (needs_anchor && std::isnan(sync_done_[e.round - 1])) {
      waiting_[e.worker] = true;
      return;
    }
    proceed(e.worker, e.round, e.time);
  }

  // Overlapped: worker has pulled back at time t and hands its model to the collective.
  void proceed(std::size_t worker, std::size_t round, double t) {
    final_time_[worker] = t;
    auto& rt = summary_.rounds[round];
    rt.completed = std::max(rt.completed, t);
    if (rt.has_sync) arrive(round, t);
    if (round + 1 < num_rounds_) start_round(worker, round + 1, t);
  }

  void arrive(std::size_t round, double t) {
    arrival_time_[round] = std::max(arrival_time_[round], t);
    if (++arrivals_[round] < m_) return;
    auto& rt = summary_.rounds[round];
    const double all_in = arrival_time_[round];
    if (rt.has_sync) {
      rt.sync_start = all_in;
      queue_.push({all_in + comm_, EventType::SyncDone, round, 0});
    } else {
      // Blocking partial final round: nothing to wait for.
      rt.completed = all_in;
      for (std::size_t i = 0; i < m_; ++i) final_time_[i] = rt.compute_finish[i];
    }
  }

  void on_sync_done(const Event& e) {
    auto& rt = summary_.rounds[e.round];
    rt.sync_finish = e.time;
    if (!overlapped_) {
      for (std::size_t i = 0; i < m_; ++i) {
        rt.idle[i] += e.time - rt.compute_finish[i];
        rt.sync_idle[i] += e.time - rt.sync_start;
        final_time_[i] = e.time;
      }
      rt.completed = e.time;
      if (e.round + 1 < num_rounds_) {
        for (std::size_t i = 0; i < m_; ++i) start_round(i, e.round + 1, e.time);
      }
      return;
    }
    sync_done_[e.round] = e.time;
    if (e.round + 1 >= num_rounds_) return;  // trailing anchor refresh, off the critical path
    auto& next = summary_.rounds[e.round + 1];
    for (std::size_t i = 0; i < m_; ++i) {
      if (!waiting_[i]) continue;
      waiting_[i] = false;
      const double wait = e.time - next.compute_finish[i];
      next.idle[i] += wait;
      next.sync_idle[i] += wait;
      proceed(i, e.round + 1, e.time);
    }
  }

  void finish() {
    double wall = 0.0;
    double syncs = 0.0;
    for (auto& rt : summary_.rounds) {
      wall = std::max(wall, rt.completed);
      rt.wall_clock = wall;
      rt.syncs_before = syncs;
      rt.idle_before = summary_.total_idle;
      if (rt.has_sync) syncs += 1.0;
      for (std::size_t i = 0; i < m_; ++i) {
        summary_.total_idle += rt.idle[i];
        summary_.total_sync_idle += rt.sync_idle[i];
      }
    }
    summary_.total_wall_clock = wall;

    if (!overlapped_) {
      for (std::size_t r = 0; r < num_rounds_; ++r) {
        summary_.critical_compute += *std::max_element(compute_[r].begin(), compute_[r].end());
        if (summary_.rounds[r].has_sync) summary_.critical_comm += comm_;
      }
      return;
    }
    std::size_t critical = 0;
    for (std::size_t i = 1; i < m_; ++i) {
      if (final_time_[i] > final_time_[critical]) critical = i;
    }
    for (std::size_t r = 0; r < num_rounds_; ++r) {
      summary_.critical_compute += compute_[r][critical];
      summary_.critical_comm += summary_.rounds[r].sync_idle[critical];
    }
  }

  bool overlapped_;
  std::size_t m_;
  double comm_;
  std::size_t num_rounds_ = 0;
  std::vector<std::vector<double>> compute_;  // [round][worker]
  ScheduleSummary summary_;
  std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
  std::vector<std::size_t> arrivals_;
  std::vector<double> arrival_time_;
  std::vector<double> sync_done_;
  std::vector<bool> waiting_;
  std::vector<double> final_time_;
};

}  // namespace

ScheduleSummary simulate(AlgorithmKind kind, const TimingModel& timing, const ComputeTrace& trace, std::size_t tau) {
  if (tau < 1) throw std::invalid_argument("simulate: tau must be >= 1");
  timing.validate();
  for (const auto& row : trace.seconds) {
    if (row.size() != trace.num_steps()) throw std::invalid_argument("simulate: ragged compute trace");
  }
  return EventLoop(kind, timing, trace, tau).run();
}

ScheduleSummary simulate(AlgorithmKind kind, const TimingModel& timing, std::size_t rounds, std::size_t tau,
                         std::size_t m, const RngStream& rng) {
  if (rounds < 1) throw std::invalid_argument("simulate: rounds must be >= 1");
  return simulate(kind, timing, sample_trace(timing, tau, rounds, m, rng), tau);
}

double comm_compute_ratio(const ScheduleSummary& summary) {
  if (!(summary.critical_compute > 0.0)) throw std::domain_error("comm_compute_ratio: zero compute time");
  return summary.critical_comm / summary.critical_compute;
}

StepTiming timing_at_step(const ScheduleSummary& summary, const ComputeTrace& trace, std::size_t k) {
  const std::size_t tau = summary.tau;
  const std::size_t r = k / tau;
  if (r >= summary.rounds.size()) throw std::out_of_range("timing_at_step: step beyond schedule");
  const RoundTiming& rt = summary.rounds[r];
  const bool round_end = (k + 1) % tau == 0 || k + 1 == trace.num_steps();

  StepTiming out;
  double syncs = rt.syncs_before;
  double idle = rt.idle_before;
  if (round_end) {
    out.wall_time_s = rt.completed;
    if (rt.has_sync) syncs += 1.0;
    for (double v : rt.idle) idle += v;
  } else {
    double latest = 0.0;
    for (std::size_t i = 0; i < summary.m; ++i) {
      double t = rt.start[i];
      for (std::size_t s = r * tau; s <= k; ++s) t += trace.seconds[i][s];
      latest = std::max(latest, t);
    }
    out.wall_time_s = latest;
  }
  out.comm_bytes = syncs * summary.payload_bytes;
  out.idle_s = idle;
  return out;
}

}  // namespace olab
