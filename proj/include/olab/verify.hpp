#pragma once

// Structural identity checks shared by the `verify` command and the acceptance
// suite. Each check returns the measured quantity; callers decide pass/fail.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "olab/algorithms.hpp"

namespace olab {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Max |scalar - matrix| over every worker, the anchor and every step, when the
/// per-worker rules and [X - eta G] W are driven by the same gradient draws.
/// pullback_fault perturbs the scalar path only (fault injection).
double matrix_scalar_max_diff(std::size_t m, std::size_t d, std::size_t tau, double alpha, std::size_t K,
                              std::uint64_t seed, double pullback_fault = 0.0);

/// Max over steps of ||(y_{k+1} - y_k) + (1-alpha) eta mean_i g_i|| / ||(1-alpha) eta mean_i g_i||.
double virtual_sequence_max_rel_error(std::size_t m, std::size_t d, std::size_t tau, double alpha, std::size_t K,
                                      std::uint64_t seed);

struct MixingGridReport {
  double max_column_sum_error = 0.0;
  double max_fixed_vector_error = 0.0;
  double max_zeta_excess = -1.0;  // max over the grid of zeta - (1 - alpha)
  double max_pagerank_error = 0.0;
  std::size_t cells = 0;
};

MixingGridReport mixing_grid(const std::vector<std::size_t>& ms, const std::vector<double>& alphas);

struct DegenerateReport {
  bool beta_zero_matches_vanilla = false;
  bool alpha_zero_matches_independent = false;
  bool tau_one_local_matches_sync = false;
  bool alpha_one_freezes_anchor = false;
};

DegenerateReport degenerate_identities(std::size_t m, std::size_t d, std::size_t K, std::uint64_t seed);

struct VerifyOptions {
  double pullback_fault = 0.0;
};

/// Runs every invariant suite; one entry per check.
std::vector<CheckResult> run_verification(const VerifyOptions& options = {});

}  // namespace olab
