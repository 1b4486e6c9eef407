// overlap_lab: run, sweep, verify and bound-check distributed SGD schemes.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "olab/commands.hpp"
#include "olab/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Overlap-Local-SGD laboratory: simulated distributed training, timing and bound checks"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::size_t jobs = 0;
  std::size_t stride = 0;
  bool override_kmin = false;
  double fault = 0.0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) cmd->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "output directory (overrides output_dir)");
    cmd->add_option("--jobs", jobs, "concurrent runs (0: one per core)");
  };

  CLI::App* run = app.add_subcommand("run", "train every configured seed and write CSV + summary JSON");
  add_common(run, true);
  run->add_option("--stride", stride, "emit every N-th step")->check(CLI::PositiveNumber);

  CLI::App* sweep = app.add_subcommand("sweep", "run the Cartesian product of the sweep axes");
  add_common(sweep, true);
  sweep->add_option("--stride", stride, "emit every N-th step")->check(CLI::PositiveNumber);

  CLI::App* verify = app.add_subcommand("verify", "run the structural invariant checks");
  verify->add_option("--inject-pullback-fault", fault, "perturb the pullback coefficient (self-test)")
      ->group("");

  CLI::App* bound = app.add_subcommand("bound", "check the convergence bound on a seed ensemble");
  add_common(bound, true);
  bound->add_flag("--override-kmin", override_kmin, "allow K below the minimum iteration count");

  CLI11_PARSE(app, argc, argv);

  olab::CommandOptions options;
  if (!out.empty()) options.out = out;
  options.jobs = jobs;
  if (stride > 0) options.stride = stride;
  options.override_kmin = override_kmin;
  options.inject_pullback_fault = fault;
  if (const char* env = std::getenv("OVERLAP_LAB_SEED"); env && *env) {
    try {
      options.seeds = olab::parse_seed_list(env);
    } catch (const std::exception& e) {
      std::cerr << "overlap_lab: invalid input: " << e.what() << '\n';
      return 2;
    }
  }

  if (*run) return olab::cmd_run(config, options, std::cout);
  if (*sweep) return olab::cmd_sweep(config, options, std::cout);
  if (*verify) return olab::cmd_verify(options, std::cout);
  return olab::cmd_bound(config, options, std::cout);
}
