#include "olab/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "olab/mixing.hpp"
#include "olab/objectives.hpp"
#include "olab/partition.hpp"
#include "olab/simulator.hpp"

namespace olab {

namespace {

constexpr double kEta = 0.05;

QuadraticEnsemble test_problem(std::size_t m, std::size_t d, std::uint64_t seed) {
  return make_quadratic(m, d, 1.0, 10.0, 1.0, RngStream(seed).derive("objective"));
}

ParamVector test_init(std::size_t d, std::uint64_t seed) {
  RngStream r = RngStream(seed).derive("init");
  ParamVector x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = r.normal();
  return x;
}

std::vector<RngStream> noise_streams(std::uint64_t seed, std::size_t m) {
  const RngStream root(seed);
  std::vector<RngStream> out;
  for (std::size_t i = 0; i < m; ++i) out.push_back(root.split(i, m, "noise"));
  return out;
}

std::vector<StackedState> capture(const AlgorithmSpec& spec, const HyperParams& hp, const Ensemble& ens,
                                  const ParamVector& init) {
  std::vector<StackedState> states;
  states.reserve(hp.K);
  run_training(spec, hp, ens, init, [&](const MetricsRecord&, const ClusterState& s, const ParamVector&) {
    states.push_back(stack(s));
  });
  return states;
}

bool same_states(const std::vector<StackedState>& a, const std::vector<StackedState>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].columns != b[k].columns) return false;
  }
  return true;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

double matrix_scalar_max_diff(std::size_t m, std::size_t d, std::size_t tau, double alpha, std::size_t K,
                              std::uint64_t seed, double pullback_fault) {
  const QuadraticEnsemble ens = test_problem(m, d, seed);
  const ParamVector init = test_init(d, seed);

  AlgorithmSpec spec;
  spec.kind = AlgorithmKind::OverlapLocal;
  spec.alpha = alpha;
  spec.pullback_fault = pullback_fault;
  Trainer scalar(spec, m, tau, kEta, init);
  std::vector<RngStream> scalar_noise = noise_streams(seed, m);

  StackedState X;
  X.columns.assign(m + 1, init);
  std::vector<RngStream> matrix_noise = noise_streams(seed, m);

  double worst = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    scalar.step([&](std::size_t i, const ParamVector& x) { return ens.stochastic_grad(i, x, scalar_noise[i]); });

    StackedState G;
    for (std::size_t i = 0; i < m; ++i) G.columns.push_back(ens.stochastic_grad(i, X.columns[i], matrix_noise[i]));
    G.columns.emplace_back(d, 0.0);
    X = matrix_step(X, G, mixing_for_step(k, tau, m, alpha), kEta);

    const ClusterState& s = scalar.state();
    for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, max_abs_diff(s.workers[i], X.columns[i]));
    worst = std::max(worst, max_abs_diff(s.anchor, X.columns[m]));
  }
  return worst;
}

double virtual_sequence_max_rel_error(std::size_t m, std::size_t d, std::size_t tau, double alpha, std::size_t K,
                                      std::uint64_t seed) {
  const QuadraticEnsemble ens = test_problem(m, d, seed);
  AlgorithmSpec spec;
  spec.kind = AlgorithmKind::OverlapLocal;
  spec.alpha = alpha;
  Trainer trainer(spec, m, tau, kEta, test_init(d, seed));
  std::vector<RngStream> noise = noise_streams(seed, m);
  const std::vector<double> v = fixed_vector(m, alpha);

  double worst = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const ParamVector y = virtual_point(stack(trainer.state()), v);
    std::vector<ParamVector> grads;
    ParamVector grad_sum(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      grads.push_back(ens.stochastic_grad(i, trainer.state().workers[i], noise[i]));
      axpy_inplace(1.0, grads.back(), grad_sum);
    }
    trainer.step(grads);
    const ParamVector y_next = virtual_point(stack(trainer.state()), v);

    // predicted increment: -(1-alpha) eta (1/m) sum_i g_i
    const ParamVector predicted = axpy(-(1.0 - alpha) * kEta / static_cast<double>(m), grad_sum, ParamVector(d, 0.0));
    const ParamVector actual = axpy(-1.0, y, y_next);
    const double scale = std::sqrt(norm_sq(predicted));
    const double err = std::sqrt(norm_sq(axpy(-1.0, predicted, actual)));
    worst = std::max(worst, scale > 0.0 ? err / scale : err);
  }
  return worst;
}

MixingGridReport mixing_grid(const std::vector<std::size_t>& ms, const std::vector<double>& alphas) {
  MixingGridReport r;
  for (std::size_t m : ms) {
    for (double a : alphas) {
      const MixingMatrix P = build_P(m, a);
      for (double s : P.entries.column_sums()) r.max_column_sum_error = std::max(r.max_column_sum_error, std::abs(s - 1.0));
      const std::vector<double> v = fixed_vector(m, a);
      const std::vector<double> Pv = P.entries.times(v);
      for (std::size_t i = 0; i < v.size(); ++i) {
        r.max_fixed_vector_error = std::max(r.max_fixed_vector_error, std::abs(Pv[i] - v[i]));
      }
      const double zeta = spectral_deviation(P.entries, v);
      r.max_zeta_excess = std::max(r.max_zeta_excess, zeta - (1.0 - a));
      const PageRankSplit split = pagerank_decompose(P);
      for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = 0; j <= m; ++j) {
          const double rebuilt = (1.0 - a) * split.A(i, j) + a * split.b[i];
          r.max_pagerank_error = std::max(r.max_pagerank_error, std::abs(rebuilt - P.entries(i, j)));
        }
      }
      ++r.cells;
    }
  }
  return r;
}

DegenerateReport degenerate_identities(std::size_t m, std::size_t d, std::size_t K, std::uint64_t seed) {
  const QuadraticEnsemble ens = test_problem(m, d, seed);
  const ParamVector init = test_init(d, seed);
  HyperParams hp;
  hp.m = m;
  hp.d = d;
  hp.tau = 3;
  hp.eta = kEta;
  hp.K = K;
  hp.seed = seed;

  DegenerateReport rep;

  AlgorithmSpec vanilla;
  vanilla.kind = AlgorithmKind::OverlapLocal;
  vanilla.alpha = 0.6;
  AlgorithmSpec momentum = vanilla;
  momentum.kind = AlgorithmKind::OverlapLocalMomentum;
  momentum.beta = 0.0;
  rep.beta_zero_matches_vanilla = same_states(capture(vanilla, hp, ens, init), capture(momentum, hp, ens, init));

  AlgorithmSpec no_pull = vanilla;
  no_pull.alpha = 0.0;
  const auto pulled = capture(no_pull, hp, ens, init);
  bool independent = pulled.size() == K;
  std::vector<RngStream> noise = noise_streams(seed, m);
  for (std::size_t i = 0; i < m && independent; ++i) {
    ParamVector x = init;
    for (std::size_t k = 0; k < K; ++k) {
      if (!(pulled[k].columns[i] == x)) {
        independent = false;
        break;
      }
      x = axpy(-kEta, ens.stochastic_grad(i, x, noise[i]), x);
    }
  }
  rep.alpha_zero_matches_independent = independent;

  HyperParams hp1 = hp;
  hp1.tau = 1;
  AlgorithmSpec local;
  local.kind = AlgorithmKind::LocalSGD;
  AlgorithmSpec sync;
  sync.kind = AlgorithmKind::SyncSGD;
  rep.tau_one_local_matches_sync = same_states(capture(local, hp1, ens, init), capture(sync, hp1, ens, init));

  AlgorithmSpec full_pull = vanilla;
  full_pull.alpha = 1.0;
  bool frozen = true;
  for (const auto& X : capture(full_pull, hp, ens, init)) frozen &= X.columns.back() == init;
  rep.alpha_one_freezes_anchor = frozen;
  return rep;
}

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  std::vector<CheckResult> results;
  auto timed = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    r.name = name;
    try {
      auto [ok, detail] = body();
      r.passed = ok;
      r.detail = std::move(detail);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(std::move(r));
  };

  timed("matrix/scalar equivalence", [&] {
    const double diff = matrix_scalar_max_diff(4, 8, 3, 0.6, 200, 1, options.pullback_fault);
    return std::pair{diff <= 1e-10, "max abs diff " + fmt(diff) + " (<= 1e-10)"};
  });

  timed("mixing grid (column sums, fixed vector, zeta, pagerank)", [&] {
    std::vector<double> alphas;
    for (int i = 1; i <= 9; ++i) alphas.push_back(0.1 * i);
    const MixingGridReport g = mixing_grid({1, 2, 4, 8, 16}, alphas);
    const bool ok = g.max_column_sum_error <= 1e-15 && g.max_fixed_vector_error <= 1e-14 &&
                    g.max_zeta_excess <= 1e-12 && g.max_pagerank_error <= 1e-15;
    return std::pair{ok, "colsum " + fmt(g.max_column_sum_error) + ", Pv-v " + fmt(g.max_fixed_vector_error) +
                             ", zeta-(1-a) " + fmt(g.max_zeta_excess) + ", recon " + fmt(g.max_pagerank_error)};
  });

  timed("zeta spot values", [&] {
    const double z1 = spectral_deviation(build_P(1, 0.6).entries, fixed_vector(1, 0.6));
    const double z2 = spectral_deviation(build_P(2, 0.5).entries, fixed_vector(2, 0.5));
    const bool ok = std::abs(z1) <= 1e-12 && std::abs(z2 - 0.5) <= 1e-12;
    return std::pair{ok, "zeta(1,0.6)=" + fmt(z1) + ", zeta(2,0.5)=" + fmt(z2)};
  });

  timed("virtual-sequence identity", [&] {
    const double err = virtual_sequence_max_rel_error(4, 8, 3, 0.6, 10000, 2);
    return std::pair{err <= 1e-12, "max relative error " + fmt(err) + " over 1e4 steps"};
  });

  timed("degenerate parameters", [&] {
    const DegenerateReport r = degenerate_identities(4, 6, 10000, 3);
    const bool ok = r.beta_zero_matches_vanilla && r.alpha_zero_matches_independent &&
                    r.tau_one_local_matches_sync && r.alpha_one_freezes_anchor;
    std::string detail = std::string("beta=0:") + (r.beta_zero_matches_vanilla ? "ok" : "FAIL") +
                         " alpha=0:" + (r.alpha_zero_matches_independent ? "ok" : "FAIL") +
                         " tau=1:" + (r.tau_one_local_matches_sync ? "ok" : "FAIL") +
                         " alpha=1:" + (r.alpha_one_freezes_anchor ? "ok" : "FAIL");
    return std::pair{ok, detail};
  });

  timed("partition disjointness and counts", [&] {
    RngStream r(11);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t m = 1 + r.below(8);
      const std::size_t classes = 2 + r.below(6);
      const std::size_t n_total = 1 + r.below(20);
      const std::size_t n_skew = r.below(n_total + 1);
      const std::size_t n = m * n_total + r.below(30);
      std::vector<int> labels(n);
      for (auto& l : labels) l = static_cast<int>(r.below(classes));
      const RngStream prng(static_cast<std::uint64_t>(trial));
      for (const PartitionPlan& plan : {label_skew_partition(labels, m, n_total, n_skew, prng), iid_partition(n, m, prng)}) {
        std::vector<int> seen(n, 0);
        for (const auto& a : plan.assignments) {
          for (std::size_t idx : a) {
            if (idx >= n || seen[idx]++) return std::pair{false, std::string("overlap or out-of-range index")};
          }
        }
      }
      for (const auto& a : label_skew_partition(labels, m, n_total, n_skew, prng).assignments) {
        if (a.size() != n_total) return std::pair{false, std::string("wrong per-worker count")};
      }
    }
    return std::pair{true, std::string("50 random label vectors")};
  });

  timed("simulator overlap properties", [&] {
    TimingModel t;
    t.compute_mean = 1.0;
    t.latency = 4.0;
    const ScheduleSummary hidden = simulate(AlgorithmKind::OverlapLocal, t, 20, 4, 4, RngStream(5));
    bool ok = hidden.total_sync_idle == 0.0;

    TimingModel noisy;
    noisy.compute_jitter = 0.2;
    noisy.straggler_prob = 0.1;
    noisy.straggler_factor = 3.0;
    noisy.latency = 0.7;
    for (std::uint64_t seed = 0; seed < 20 && ok; ++seed) {
      const ComputeTrace trace = sample_trace(noisy, 2, 30, 4, RngStream(seed));
      const double sync = simulate(AlgorithmKind::SyncSGD, noisy, trace, 1).total_wall_clock;
      const double local = simulate(AlgorithmKind::LocalSGD, noisy, trace, 2).total_wall_clock;
      const double overlap = simulate(AlgorithmKind::OverlapLocal, noisy, trace, 2).total_wall_clock;
      ok = overlap <= local && local <= sync;
    }

    TimingModel blocking;
    blocking.latency = 0.5;
    const double ratio = comm_compute_ratio(simulate(AlgorithmKind::LocalSGD, blocking, 10, 2, 4, RngStream(0)));
    ok = ok && ratio == 0.25;
    return std::pair{ok, "hidden idle " + fmt(hidden.total_sync_idle) + ", blocking ratio " + fmt(ratio)};
  });

  return results;
}

}  // namespace olab
