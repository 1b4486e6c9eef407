#pragma once

// Run configuration: JSON parsing with strict key checking, convention-based
// defaults, and resolution of one (algorithm, tau, alpha, K, seed) point into
// the concrete objects a run needs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "olab/algorithms.hpp"
#include "olab/core.hpp"
#include "olab/objectives.hpp"
#include "olab/simulator.hpp"

namespace olab {

struct PartitionConfig {
  std::string mode = "iid";  // "iid" | "label_skew"
  std::size_t n_total = 0;   // 0: samples / m
  std::size_t n_skew = 0;
};

struct ObjectiveConfig {
  std::string type = "quadratic";  // "quadratic" | "logistic"
  std::uint64_t seed = 0;
  // quadratic
  double spread = 1.0;
  double condition = 10.0;
  double sigma = 1.0;
  // logistic
  std::size_t samples = 2000;
  std::size_t num_classes = 4;
  double separation = 2.0;
  double lambda = 1e-3;
  std::size_t batch = 8;
  PartitionConfig partition;
};

struct InitConfig {
  std::string mode = "zero";  // "zero" | "gaussian" | "minimizer"
  double scale = 1.0;
};

struct SweepAxes {
  std::vector<AlgorithmKind> algorithm;
  std::vector<std::size_t> tau;
  std::vector<double> alpha;
  std::vector<std::size_t> K;
  std::vector<std::uint64_t> seeds;
};

/// Everything a config file can say. Optional fields are filled in per run
/// point by resolve(), because their defaults depend on the kind and tau.
struct RunConfig {
  AlgorithmKind algorithm = AlgorithmKind::OverlapLocal;
  std::size_t m = 4;
  std::size_t d = 10;
  std::size_t tau = 2;
  std::size_t K = 1000;
  std::optional<double> alpha;
  std::optional<double> eta = 0.1;  // empty: "theorem"
  std::optional<double> lr_scale;
  std::optional<double> beta;
  std::optional<double> mu;
  std::optional<double> alpha_e;
  bool reset_local_momentum = false;

  ObjectiveConfig objective;
  InitConfig init;
  TimingModel timing;

  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";
  std::string run_id = "run";
  std::size_t stride = 1;
  bool verification_mode = false;
  std::optional<SweepAxes> sweep;
};

/// Parses and validates a config document. Errors name the offending field
/// ("hyper.alpha: must lie in [0, 1]") and are thrown as ConfigError.
RunConfig parse_config(const nlohmann::json& doc);

/// Reads a JSON file; syntax errors report line and column.
RunConfig load_config(const std::filesystem::path& path);

/// Parses a comma-separated seed list such as "1,2,3".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// One fully resolved run point.
struct ResolvedRun {
  AlgorithmSpec spec;
  HyperParams hyper;  // eta resolved
  double lr_scale = 1.0;
  TimingModel timing;
};

/// Applies defaults: beta 0.7; alpha 0.6 for tau >= 2 and 0.5 with a 1.5x learning
/// rate for tau = 1 (overlap kinds); mu 0.9 (0 in verification mode); alpha_e = alpha/m.
ResolvedRun resolve(const RunConfig& cfg, AlgorithmKind kind, std::size_t tau, std::optional<double> alpha,
                    std::size_t K, std::uint64_t seed, const Ensemble& ensemble);

/// The objective is fixed by the config (objective.seed); run seeds only drive noise.
std::unique_ptr<Ensemble> build_ensemble(const RunConfig& cfg);

/// Exact L when the objective has one (quadratic), otherwise empty.
std::optional<double> exact_smoothness(const Ensemble& ensemble);

ParamVector build_init(const RunConfig& cfg, const Ensemble& ensemble);

/// The config with every default expanded (the resolved point for the base config).
nlohmann::json resolved_json(const RunConfig& cfg);

}  // namespace olab
