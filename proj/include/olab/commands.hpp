#pragma once

// The four CLI subcommands as library calls, so tests can drive them directly.
// Exit codes: 0 success, 1 a check or bound failed, 2 invalid input.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "olab/algorithms.hpp"
#include "olab/config.hpp"
#include "olab/simulator.hpp"

namespace olab {

struct CommandOptions {
  std::optional<std::filesystem::path> out;  // overrides output_dir
  std::size_t jobs = 0;                      // 0: OpenMP default
  std::optional<std::size_t> stride;
  bool override_kmin = false;
  std::optional<std::vector<std::uint64_t>> seeds;  // from OVERLAP_LAB_SEED
  double inject_pullback_fault = 0.0;               // verify only
};

/// Result of one (config point, seed) run including its simulated schedule.
struct PointResult {
  ResolvedRun run;
  TrainingSummary training;
  double wall_clock_s = 0.0;
  double total_idle_s = 0.0;
  std::optional<double> comm_ratio;  // empty when the schedule has no compute
  std::vector<MetricsRecord> records;
};

/// Trains one point and simulates its schedule (seeded from the run seed).
PointResult execute_point(const ResolvedRun& run, const Ensemble& ensemble, const ParamVector& init,
                          std::size_t stride, bool keep_records);

struct BoundReport {
  nlohmann::json doc;
  bool holds = false;
};

/// Seed-ensemble check of the convergence bound. Throws ConfigError when the
/// config is outside the bound's regime (see cmd_bound).
BoundReport run_bound_check(const RunConfig& cfg, bool override_kmin, std::size_t jobs);

int cmd_run(const std::filesystem::path& config, const CommandOptions& options, std::ostream& log);
int cmd_sweep(const std::filesystem::path& config, const CommandOptions& options, std::ostream& log);
int cmd_verify(const CommandOptions& options, std::ostream& log);
int cmd_bound(const std::filesystem::path& config, const CommandOptions& options, std::ostream& log);

}  // namespace olab
