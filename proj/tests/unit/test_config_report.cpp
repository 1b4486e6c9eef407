#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "olab/commands.hpp"
#include "olab/config.hpp"
#include "olab/report.hpp"

using namespace olab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string config_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("olab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("defaults and a complete config") {
  const RunConfig d = parse_config(json::object());
  CHECK(d.algorithm == AlgorithmKind::OverlapLocal);
  CHECK(d.seeds == std::vector<std::uint64_t>{0});
  CHECK(d.timing.payload_bytes == 8.0 * static_cast<double>(d.d));

  const RunConfig c = parse_config(json::parse(R"({
    "algorithm": "easgd", "run_id": "abc",
    "hyper": {"m": 3, "d": 5, "tau": 4, "K": 50, "alpha": 0.3, "eta": "theorem", "beta": 0.5, "mu": 0.2,
              "alpha_e": 0.1, "reset_local_momentum": true},
    "objective": {"type": "quadratic", "seed": 9, "spread": 2, "condition": 4, "sigma": 0.5},
    "init": {"mode": "gaussian", "scale": 0.1},
    "timing": {"compute_mean": 0.2, "latency": 0.3, "payload_bytes": 100},
    "seeds": [4, 5], "output_dir": "x", "stride": 5, "verification_mode": false
  })"));
  CHECK(c.algorithm == AlgorithmKind::EASGD);
  CHECK(c.m == 3);
  CHECK(c.tau == 4);
  CHECK_FALSE(c.eta.has_value());
  CHECK(*c.alpha == 0.3);
  CHECK(c.reset_local_momentum);
  CHECK(c.objective.seed == 9);
  CHECK(c.init.mode == "gaussian");
  CHECK(c.timing.payload_bytes == 100.0);
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(c.stride == 5);
}

TEST_CASE("config errors name the offending field") {
  CHECK(config_error(json::parse(R"({"hyper": {"alpha": 1.5}})")).find("hyper.alpha") == 0);
  CHECK(config_error(json::parse(R"({"hyper": {"alhpa": 0.5}})")) == "hyper.alhpa: unknown key");
  CHECK(config_error(json::parse(R"({"color": 1})")) == "color: unknown key");
  CHECK(config_error(json::parse(R"({"hyper": {"m": 0}})")) == "hyper.m: must be >= 1");
  CHECK(config_error(json::parse(R"({"hyper": {"m": -2}})")) == "hyper.m: must be >= 0");
  CHECK(config_error(json::parse(R"({"hyper": {"eta": "fast"}})")).find("hyper.eta") == 0);
  CHECK(config_error(json::parse(R"({"hyper": {"beta": 1.0}})")) == "hyper.beta: must lie in [0, 1)");
  CHECK(config_error(json::parse(R"({"hyper": {"alpha": 1.0}})")).find("verification_mode") != std::string::npos);
  CHECK(config_error(json::parse(R"({"hyper": {"alpha": 1.0}, "verification_mode": true})")).empty());
  CHECK(config_error(json::parse(R"({"algorithm": "sync_sgd", "hyper": {"tau": 2}})")) ==
        "hyper.tau: sync_sgd requires tau = 1");
  CHECK(config_error(json::parse(R"({"algorithm": "gossip"})")).find("algorithm") == 0);
  CHECK(config_error(json::parse(R"({"timing": {"straggler_factor": 0.5}})")).find("timing.straggler_factor") == 0);
  CHECK(config_error(json::parse(R"({"objective": {"type": "logistic"}, "hyper": {"eta": "theorem"}})"))
            .find("hyper.eta") == 0);
  CHECK(config_error(json::parse(R"({"sweep": {"tau": [2, 0]}})")) == "sweep.tau[1]: must be >= 1");
  CHECK(config_error(json::parse(R"({"run_id": "a/b"})")).find("run_id") == 0);
  CHECK(config_error(json::parse("[1, 2]")).find("<root>") == 0);
}

TEST_CASE("syntax errors report line and column") {
  const fs::path dir = scratch("syntax");
  const fs::path p = write_file(dir / "bad.json", "{\n  \"hyper\": {\n    \"m\": 4,,\n  }\n}\n");
  try {
    load_config(p);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3, column") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("seed lists") {
  CHECK(parse_seed_list("1,2, 3") == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(parse_seed_list("18446744073709551615") == std::vector<std::uint64_t>{18446744073709551615ULL});
  CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("-1"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("99999999999999999999"), ConfigError);
}

TEST_CASE("resolution applies the hyperparameter conventions") {
  RunConfig cfg = parse_config(json::parse(R"({"hyper": {"m": 4, "d": 3, "eta": 0.1}})"));
  const auto e = build_ensemble(cfg);

  ResolvedRun r = resolve(cfg, AlgorithmKind::OverlapLocalMomentum, 2, std::nullopt, 100, 1, *e);
  CHECK(r.spec.alpha == 0.6);
  CHECK(r.spec.beta == 0.7);
  CHECK(r.spec.mu == 0.9);
  CHECK(*r.hyper.eta == 0.1);

  r = resolve(cfg, AlgorithmKind::OverlapLocal, 1, std::nullopt, 100, 1, *e);
  CHECK(r.spec.alpha == 0.5);
  CHECK(r.lr_scale == 1.5);
  CHECK(*r.hyper.eta == doctest::Approx(0.15).epsilon(1e-15));

  r = resolve(cfg, AlgorithmKind::LocalSGD, 1, std::nullopt, 100, 1, *e);
  CHECK(r.lr_scale == 1.0);

  r = resolve(cfg, AlgorithmKind::EASGD, 2, 0.4, 100, 1, *e);
  CHECK(r.spec.alpha_e == doctest::Approx(0.1));

  cfg.verification_mode = true;
  CHECK(resolve(cfg, AlgorithmKind::OverlapLocal, 2, std::nullopt, 100, 1, *e).spec.mu == 0.0);

  cfg.eta.reset();
  r = resolve(cfg, AlgorithmKind::OverlapLocal, 2, std::nullopt, 400, 1, *e);
  CHECK(*r.hyper.eta == doctest::Approx(std::sqrt(4.0 / 400.0) / *exact_smoothness(*e)).epsilon(1e-15));

  CHECK_THROWS_WITH_AS(resolve(cfg, AlgorithmKind::SyncSGD, 2, std::nullopt, 10, 1, *e),
                       "hyper.tau: sync_sgd requires tau = 1", ConfigError);
}

TEST_CASE("ensembles and init points from configs") {
  const RunConfig q = parse_config(json::parse(R"({"hyper": {"m": 3, "d": 4}, "objective": {"seed": 5},
                                                  "init": {"mode": "minimizer"}})"));
  const auto a = build_ensemble(q);
  const auto b = build_ensemble(q);
  const auto& qa = dynamic_cast<const QuadraticEnsemble&>(*a);
  CHECK(qa.centers() == dynamic_cast<const QuadraticEnsemble&>(*b).centers());
  CHECK(build_init(q, *a) == qa.minimizer());

  const RunConfig l = parse_config(json::parse(R"({"hyper": {"m": 4, "d": 3},
      "objective": {"type": "logistic", "samples": 400, "partition": {"mode": "label_skew", "n_skew": 60}}})"));
  const auto le = build_ensemble(l);
  CHECK(le->num_workers() == 4);
  CHECK_FALSE(exact_smoothness(*le).has_value());
  CHECK(build_init(l, *le) == ParamVector(3, 0.0));
}

TEST_CASE("CSV round trip is exact") {
  std::vector<CsvRow> rows;
  RngStream r(1);
  for (std::size_t k = 0; k < 50; ++k) {
    MetricsRecord rec;
    rec.k = k;
    rec.wall_time_s = r.uniform() * 1e3;
    rec.objective = r.normal() * 1e-200;
    rec.grad_norm_sq = std::numeric_limits<double>::denorm_min() * static_cast<double>(k);
    rec.consensus_dist = 1.0 / 3.0;
    rec.comm_bytes = 8.0 * static_cast<double>(k);
    rec.idle_s = r.normal();
    rows.push_back({"run", "overlap_local", 18446744073709551615ULL, rec});
  }
  std::stringstream s;
  write_metrics_csv(s, rows);
  const auto back = read_metrics_csv(s);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].run_id == rows[i].run_id);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(back[i].record.k == rows[i].record.k);
    CHECK(back[i].record.wall_time_s == rows[i].record.wall_time_s);
    CHECK(back[i].record.objective == rows[i].record.objective);
    CHECK(back[i].record.grad_norm_sq == rows[i].record.grad_norm_sq);
    CHECK(back[i].record.consensus_dist == rows[i].record.consensus_dist);
    CHECK(back[i].record.comm_bytes == rows[i].record.comm_bytes);
    CHECK(back[i].record.idle_s == rows[i].record.idle_s);
  }
}

TEST_CASE("an empty run writes only the header") {
  std::stringstream s;
  write_metrics_csv(s, {});
  CHECK(s.str() == std::string(kMetricsHeader) + "\n");
  CHECK(read_metrics_csv(s).empty());

  std::stringstream bad("run_id,k\n");
  CHECK_THROWS(read_metrics_csv(bad));
  std::stringstream short_row(std::string(kMetricsHeader) + "\nr,a,1,2\n");
  CHECK_THROWS(read_metrics_csv(short_row));
}

TEST_CASE("run command: minimal synchronous config") {
  const fs::path dir = scratch("run");
  const fs::path cfg = write_file(dir / "cfg.json", R"({"algorithm": "sync_sgd", "run_id": "mini",
      "hyper": {"m": 1, "d": 2, "tau": 1, "K": 10}, "seeds": [3]})");
  CommandOptions opts;
  opts.out = dir / "out";
  std::ostringstream log;
  CHECK(cmd_run(cfg, opts, log) == 0);
  std::ifstream csv(dir / "out" / "mini_seed3.csv", std::ios::binary);
  CHECK(read_metrics_csv(csv).size() == 10);
  const json summary = json::parse(slurp(dir / "out" / "mini_summary.json"));
  CHECK(summary["command"] == "run");
  CHECK(summary["runs"].size() == 1);
  CHECK(summary["runs"][0]["status"] == "ok");

  // Rejected configs exit with the input-error code and write nothing.
  const fs::path bad = write_file(dir / "bad.json", R"({"hyper": {"alpha": 1.5}})");
  opts.out = dir / "bad_out";
  CHECK(cmd_run(bad, opts, log) == 2);
  CHECK_FALSE(fs::exists(dir / "bad_out"));
}

TEST_CASE("run command reports divergence without failing") {
  const fs::path dir = scratch("diverge");
  const fs::path cfg = write_file(dir / "cfg.json", R"({"algorithm": "local_sgd", "run_id": "big",
      "hyper": {"m": 2, "d": 2, "tau": 2, "K": 3000, "eta": 5.0, "mu": 0}, "objective": {"condition": 10}})");
  CommandOptions opts;
  opts.out = dir;
  std::ostringstream log;
  CHECK(cmd_run(cfg, opts, log) == 0);
  const json summary = json::parse(slurp(dir / "big_summary.json"));
  CHECK(summary["runs"][0]["status"] == "diverged");
}

TEST_CASE("sweep command collapses axes the algorithm does not read") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_file(dir / "cfg.json", R"({"run_id": "sw", "hyper": {"m": 2, "d": 3, "K": 40},
      "sweep": {"algorithm": ["sync_sgd", "local_sgd", "overlap_local"], "tau": [1, 2], "alpha": [0.3, 0.6],
                "seeds": [0, 1]}})");
  CommandOptions opts;
  opts.out = dir;
  std::ostringstream log;
  REQUIRE(cmd_sweep(cfg, opts, log) == 0);
  // sync: 1 tau x 1 alpha x 2 seeds; local: 2 x 1 x 2; overlap: 2 x 2 x 2.
  std::ifstream table(dir / "sw_sweep.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(table, line)) ++lines;
  CHECK(lines == 1 + 2 + 4 + 8);
  CHECK(fs::exists(dir / "sw_plot.csv"));
  CHECK(json::parse(slurp(dir / "sw_summary.json"))["points"].size() == 14);

  const fs::path plain = write_file(dir / "plain.json", R"({"run_id": "p"})");
  CHECK(cmd_sweep(plain, opts, log) == 2);
}

TEST_CASE("bound command refuses configs outside its regime") {
  const RunConfig base = parse_config(json::parse(R"({"hyper": {"m": 2, "d": 2, "tau": 1, "K": 100, "eta": "theorem",
      "alpha": 0.5}, "verification_mode": false})"));
  CHECK_THROWS_WITH_AS(run_bound_check(base, false, 1),
                       "hyper.K: 100 is below min_iterations = 480; pass --override-kmin to run anyway", ConfigError);
  RunConfig numeric = base;
  numeric.eta = 0.1;
  CHECK_THROWS_AS(run_bound_check(numeric, true, 1), ConfigError);
  RunConfig local = base;
  local.algorithm = AlgorithmKind::LocalSGD;
  CHECK_THROWS_AS(run_bound_check(local, true, 1), ConfigError);

  RunConfig small = base;
  small.seeds = {1, 2};
  const BoundReport r = run_bound_check(small, true, 1);
  CHECK(r.doc["inputs"]["meets_iteration_threshold"] == false);
  CHECK(r.doc["per_seed_lhs"].size() == 2);
}
