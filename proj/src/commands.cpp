#include "olab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "olab/analysis.hpp"
#include "olab/parallel.hpp"
#include "olab/report.hpp"
#include "olab/verify.hpp"

namespace olab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

const char* status_name(RunStatus s) { return s == RunStatus::Ok ? "ok" : "diverged"; }

void apply_overrides(RunConfig& cfg, const CommandOptions& options) {
  if (options.out) cfg.output_dir = options.out->string();
  if (options.stride) {
    if (*options.stride < 1) throw ConfigError("--stride: must be >= 1");
    cfg.stride = *options.stride;
  }
  if (options.seeds) {
    cfg.seeds = *options.seeds;
    if (cfg.sweep) cfg.sweep->seeds = *options.seeds;
  }
  const std::set<std::uint64_t> unique(cfg.seeds.begin(), cfg.seeds.end());
  if (unique.size() != cfg.seeds.size()) throw ConfigError("seeds: duplicate seed");
}

json constants_json(const Ensemble& ensemble, double best_observed) {
  if (const auto* q = dynamic_cast<const QuadraticEnsemble*>(&ensemble)) {
    const ExactConstants c = exact_constants(*q);
    return {{"exact", true},
            {"L", c.L},
            {"kappa2", c.kappa2},
            {"F_inf", c.F_inf},
            {"sigma2", q->sigma() * q->sigma()}};
  }
  const auto& l = dynamic_cast<const LogisticEnsemble&>(ensemble);
  const EstimatedConstants c = estimated_constants(l, best_observed);
  return {{"exact", false}, {"L_upper", c.L_upper}, {"kappa2", nullptr}, {"F_inf_estimate", number(c.F_inf_estimate)}};
}

json point_json(const PointResult& p) {
  const ResolvedRun& r = p.run;
  return {{"algorithm", std::string(to_string(r.spec.kind))},
          {"seed", r.hyper.seed},
          {"tau", r.hyper.tau},
          {"alpha", r.spec.alpha},
          {"eta", *r.hyper.eta},
          {"lr_scale", r.lr_scale},
          {"beta", r.spec.beta},
          {"mu", r.spec.mu},
          {"K", r.hyper.K},
          {"status", status_name(p.training.status)},
          {"diagnostic", p.training.diagnostic},
          {"steps_completed", p.training.steps_completed},
          {"final_objective", number(p.training.final_objective)},
          {"final_grad_norm_sq", number(p.training.final_grad_norm_sq)},
          {"avg_grad_norm_sq", number(p.training.avg_grad_norm_sq)},
          {"wall_clock_s", p.wall_clock_s},
          {"total_idle_s", p.total_idle_s},
          {"comm_compute_ratio", optional_number(p.comm_ratio)}};
}

double best_final_objective(const std::vector<PointResult>& results) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : results) {
    if (p.training.status == RunStatus::Ok) best = std::min(best, p.training.final_objective);
  }
  return best;
}

template <typename Body>
int guarded(std::string_view command, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "overlap_lab " << command << ": invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "overlap_lab " << command << ": error: " << e.what() << '\n';
    return 1;
  }
}

std::string short_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

PointResult execute_point(const ResolvedRun& run, const Ensemble& ensemble, const ParamVector& init,
                          std::size_t stride, bool keep_records) {
  const HyperParams& hp = run.hyper;
  const std::size_t rounds = (hp.K + hp.tau - 1) / hp.tau;
  ComputeTrace trace = sample_trace(run.timing, hp.tau, rounds, hp.m, RngStream(hp.seed).derive("schedule"));
  for (auto& row : trace.seconds) row.resize(hp.K);
  const ScheduleSummary schedule = simulate(run.spec.kind, run.timing, trace, hp.tau);

  PointResult out;
  out.run = run;
  out.wall_clock_s = schedule.total_wall_clock;
  out.total_idle_s = schedule.total_idle;
  if (schedule.critical_compute > 0.0) out.comm_ratio = comm_compute_ratio(schedule);

  TrainingOptions options;
  options.stride = stride;
  // Row k describes the state before step k, i.e. after step k-1 has finished.
  options.timing = [&](std::size_t k) { return k == 0 ? StepTiming{} : timing_at_step(schedule, trace, k - 1); };
  MetricsSink sink;
  if (keep_records) {
    sink = [&](const MetricsRecord& rec, const ClusterState&, const ParamVector&) { out.records.push_back(rec); };
  }
  out.training = run_training(run.spec, hp, ensemble, init, sink, options);
  return out;
}

int cmd_run(const fs::path& config, const CommandOptions& options, std::ostream& log) {
  return guarded("run", [&] {
    RunConfig cfg = load_config(config);
    apply_overrides(cfg, options);
    if (cfg.sweep) throw ConfigError("sweep: present; use the sweep command for sweeps");
    const auto ensemble = build_ensemble(cfg);
    const ParamVector init = build_init(cfg, *ensemble);
    std::vector<ResolvedRun> runs;
    for (auto seed : cfg.seeds) runs.push_back(resolve(cfg, cfg.algorithm, cfg.tau, cfg.alpha, cfg.K, seed, *ensemble));

    const auto results = parallel_map(
        runs.size(), [&](std::size_t i) { return execute_point(runs[i], *ensemble, init, cfg.stride, true); },
        options.jobs);

    const fs::path out_dir(cfg.output_dir);
    json entries = json::array();
    for (const auto& p : results) {
      const std::string file = cfg.run_id + "_seed" + std::to_string(p.run.hyper.seed) + ".csv";
      std::vector<CsvRow> rows;
      rows.reserve(p.records.size());
      for (const auto& rec : p.records) {
        rows.push_back({cfg.run_id, std::string(to_string(p.run.spec.kind)), p.run.hyper.seed, rec});
      }
      emit_csv(out_dir / file, rows);
      json entry = point_json(p);
      entry["csv"] = file;
      entries.push_back(entry);
      log << "seed " << p.run.hyper.seed << ": " << status_name(p.training.status)
          << "  avg ||grad F(y)||^2 = " << p.training.avg_grad_norm_sq << "  wall clock = " << p.wall_clock_s
          << " s\n";
    }
    const json doc = {{"command", "run"},
                      {"config", resolved_json(cfg)},
                      {"constants", constants_json(*ensemble, best_final_objective(results))},
                      {"runs", entries}};
    write_json(out_dir / (cfg.run_id + "_summary.json"), doc);
    log << "wrote " << results.size() << " csv file(s) and " << (out_dir / (cfg.run_id + "_summary.json")).string()
        << '\n';
    return 0;
  });
}

int cmd_sweep(const fs::path& config, const CommandOptions& options, std::ostream& log) {
  return guarded("sweep", [&] {
    RunConfig cfg = load_config(config);
    if (!cfg.sweep) throw ConfigError("sweep: missing; the sweep command needs a sweep section");
    apply_overrides(cfg, options);
    const SweepAxes& axes = *cfg.sweep;
    const auto algorithms = axes.algorithm.empty() ? std::vector<AlgorithmKind>{cfg.algorithm} : axes.algorithm;
    const auto taus = axes.tau.empty() ? std::vector<std::size_t>{cfg.tau} : axes.tau;
    const auto Ks = axes.K.empty() ? std::vector<std::size_t>{cfg.K} : axes.K;
    const auto seeds = axes.seeds.empty() ? cfg.seeds : axes.seeds;
    std::vector<std::optional<double>> alphas;
    if (axes.alpha.empty()) {
      alphas.push_back(cfg.alpha);
    } else {
      for (double a : axes.alpha) alphas.emplace_back(a);
    }

    const auto ensemble = build_ensemble(cfg);
    const ParamVector init = build_init(cfg, *ensemble);
    std::vector<ResolvedRun> runs;
    for (AlgorithmKind kind : algorithms) {
      // SyncSGD is defined only at tau = 1, and only the pullback kinds read alpha.
      const bool uses_alpha = is_overlapped(kind) && kind != AlgorithmKind::CoCoD;
      const auto kind_taus = kind == AlgorithmKind::SyncSGD ? std::vector<std::size_t>{1} : taus;
      const auto kind_alphas = uses_alpha ? alphas : std::vector<std::optional<double>>{cfg.alpha};
      for (std::size_t tau : kind_taus) {
        for (const auto& alpha : kind_alphas) {
          for (std::size_t K : Ks) {
            for (auto seed : seeds) runs.push_back(resolve(cfg, kind, tau, alpha, K, seed, *ensemble));
          }
        }
      }
    }

    const auto results = parallel_map(
        runs.size(), [&](std::size_t i) { return execute_point(runs[i], *ensemble, init, cfg.stride, false); },
        options.jobs);

    std::vector<std::vector<std::string>> rows;
    json entries = json::array();
    // series -> tau -> (sum, count, sum of wall clocks)
    struct Acc {
      double grad = 0.0, wall = 0.0;
      std::size_t n = 0;
    };
    std::map<std::string, std::map<std::size_t, Acc>> plot;
    for (const auto& p : results) {
      const ResolvedRun& r = p.run;
      const std::string kind(to_string(r.spec.kind));
      rows.push_back({cfg.run_id, kind, std::to_string(r.hyper.tau), format_real(r.spec.alpha),
                      std::to_string(r.hyper.K), std::to_string(r.hyper.seed), status_name(p.training.status),
                      format_real(p.training.final_objective), format_real(p.training.avg_grad_norm_sq),
                      format_real(p.wall_clock_s), p.comm_ratio ? format_real(*p.comm_ratio) : "",
                      format_real(p.total_idle_s)});
      entries.push_back(point_json(p));

      std::string series = kind;
      if (alphas.size() > 1) series += "|alpha=" + short_real(r.spec.alpha);
      if (Ks.size() > 1) series += "|K=" + std::to_string(r.hyper.K);
      Acc& acc = plot[series][r.hyper.tau];
      acc.grad += p.training.avg_grad_norm_sq;
      acc.wall += p.wall_clock_s;
      ++acc.n;
    }
    std::vector<std::vector<std::string>> plot_rows;
    for (const auto& [series, by_tau] : plot) {
      for (const auto& [tau, acc] : by_tau) {
        const double n = static_cast<double>(acc.n);
        plot_rows.push_back({std::to_string(tau), format_real(acc.grad / n), series + ":avg_grad_norm_sq"});
        plot_rows.push_back({std::to_string(tau), format_real(acc.wall / n), series + ":wall_clock_s"});
      }
    }

    const fs::path out_dir(cfg.output_dir);
    write_table(out_dir / (cfg.run_id + "_sweep.csv"),
                {"run_id", "algorithm", "tau", "alpha", "K", "seed", "status", "final_objective", "avg_grad_norm_sq",
                 "wall_clock_s", "comm_compute_ratio", "total_idle_s"},
                rows);
    write_table(out_dir / (cfg.run_id + "_plot.csv"), {"x", "y", "series"}, plot_rows);
    write_json(out_dir / (cfg.run_id + "_summary.json"), {{"command", "sweep"},
                                                          {"config", resolved_json(cfg)},
                                                          {"constants", constants_json(*ensemble, best_final_objective(results))},
                                                          {"points", entries}});
    log << "swept " << results.size() << " point(s) into " << (out_dir / (cfg.run_id + "_sweep.csv")).string()
        << '\n';
    return 0;
  });
}

int cmd_verify(const CommandOptions& options, std::ostream& log) {
  return guarded("verify", [&] {
    VerifyOptions vo;
    vo.pullback_fault = options.inject_pullback_fault;
    const auto results = run_verification(vo);
    std::size_t failed = 0;
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    for (const auto& r : results) {
      failed += r.passed ? 0 : 1;
      log << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width)) << r.name << "  "
          << r.detail << "  (" << std::fixed << std::setprecision(2) << r.seconds << " s)\n";
      log.unsetf(std::ios::floatfield);
    }
    log << results.size() - failed << "/" << results.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
  });
}

BoundReport run_bound_check(const RunConfig& cfg_in, bool override_kmin, std::size_t jobs) {
  RunConfig cfg = cfg_in;
  if (cfg.objective.type != "quadratic") {
    throw ConfigError(
        "objective.type: bound checks need a quadratic objective; no uniform gradient-deviation bound is certified "
        "for logistic objectives");
  }
  if (cfg.algorithm != AlgorithmKind::OverlapLocal) {
    throw ConfigError("algorithm: the bound check covers overlap_local only");
  }
  if (cfg.eta) throw ConfigError("hyper.eta: bound checks need eta = \"theorem\"");
  if (cfg.mu && *cfg.mu != 0.0) throw ConfigError("hyper.mu: bound checks need mu = 0");
  cfg.mu = 0.0;
  const double alpha = cfg.alpha.value_or(cfg.tau == 1 ? 0.5 : 0.6);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("hyper.alpha: bound checks need alpha in (0, 1)");
  const std::uint64_t k_min = min_iterations(cfg.m, cfg.tau, alpha);
  if (cfg.K < k_min && !override_kmin) {
    throw ConfigError("hyper.K: " + std::to_string(cfg.K) + " is below min_iterations = " + std::to_string(k_min) +
                      "; pass --override-kmin to run anyway");
  }

  const auto ensemble = build_ensemble(cfg);
  const auto& quad = dynamic_cast<const QuadraticEnsemble&>(*ensemble);
  const ExactConstants c = exact_constants(quad);
  const ParamVector init = build_init(cfg, *ensemble);

  BoundInputs in;
  in.L = c.L;
  in.gap = std::max(0.0, quad.objective_value(init) - c.F_inf);
  in.sigma2 = quad.sigma() * quad.sigma();
  in.kappa2 = c.kappa2;
  in.m = cfg.m;
  in.tau = cfg.tau;
  in.alpha = alpha;
  in.K = cfg.K;

  std::vector<ResolvedRun> runs;
  for (auto seed : cfg.seeds) runs.push_back(resolve(cfg, cfg.algorithm, cfg.tau, alpha, cfg.K, seed, *ensemble));
  const auto summaries = parallel_map(
      runs.size(),
      [&](std::size_t i) { return run_training(runs[i].spec, runs[i].hyper, *ensemble, init, nullptr); }, jobs);

  json per_seed = json::array();
  double total = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double lhs = summaries[i].status == RunStatus::Ok ? summaries[i].avg_grad_norm_sq
                                                            : std::numeric_limits<double>::infinity();
    total += lhs;
    per_seed.push_back({{"seed", runs[i].hyper.seed}, {"lhs", number(lhs)}, {"status", status_name(summaries[i].status)}});
  }
  const double mean_lhs = total / static_cast<double>(runs.size());
  const BoundTerms terms = theorem_rhs_terms(in);
  const double rhs = terms.total();
  const double eta = *runs.front().hyper.eta;

  BoundReport report;
  report.holds = mean_lhs <= rhs;
  report.doc = {
      {"command", "bound"},
      {"config", resolved_json(cfg)},
      {"inputs",
       {{"L", in.L},
        {"gap", in.gap},
        {"sigma2", in.sigma2},
        {"kappa2", in.kappa2},
        {"m", in.m},
        {"tau", in.tau},
        {"alpha", in.alpha},
        {"K", in.K},
        {"eta", eta},
        {"min_iterations", k_min},
        {"meets_iteration_threshold", meets_iteration_threshold(in)},
        {"d_constant", d_constant(eta, in.L, in.tau, in.alpha)}}},
      {"per_seed_lhs", per_seed},
      {"mean_lhs", number(mean_lhs)},
      {"rhs", rhs},
      {"terms",
       {{"initial_gap", terms.initial_gap},
        {"noise", terms.noise},
        {"noise_drift", terms.noise_drift},
        {"heterogeneity", terms.heterogeneity}}},
      {"slack", mean_lhs > 0.0 ? number(rhs / mean_lhs) : json(nullptr)},
      {"verdict", report.holds ? "bound holds" : "bound violated"},
  };
  return report;
}

int cmd_bound(const fs::path& config, const CommandOptions& options, std::ostream& log) {
  return guarded("bound", [&] {
    RunConfig cfg = load_config(config);
    apply_overrides(cfg, options);
    const BoundReport report = run_bound_check(cfg, options.override_kmin, options.jobs);
    const fs::path path = fs::path(cfg.output_dir) / (cfg.run_id + "_bound_report.json");
    write_json(path, report.doc);
    log << "mean LHS = " << report.doc["mean_lhs"].dump() << ", RHS = " << report.doc["rhs"].dump() << ": "
        << report.doc["verdict"].get<std::string>() << '\n'
        << "wrote " << path.string() << '\n';
    return report.holds ? 0 : 1;
  });
}

}  // namespace olab
