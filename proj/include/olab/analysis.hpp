#pragma once

// Convergence-bound apparatus for Overlap-Local-SGD: the prescribed learning
// rate, the minimum iteration count, the four-term right-hand side, and the
// empirical side (gradient norms along the virtual sequence, rate fits).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "olab/core.hpp"
#include "olab/objectives.hpp"

namespace olab {

struct BoundInputs {
  double L = 1.0;
  double gap = 0.0;  // F(y_0) - F_inf
  double sigma2 = 0.0;
  double kappa2 = 0.0;
  std::size_t m = 1;
  std::size_t tau = 1;
  double alpha = 0.5;
  std::size_t K = 1;

  void validate() const;
};

/// eta = (1/L) sqrt(m/K)
double theorem_lr(double L, std::size_t m, std::size_t K);

/// ceil(60 m tau^2 / alpha^2)
std::uint64_t min_iterations(std::size_t m, std::size_t tau, double alpha);

struct BoundTerms {
  double initial_gap;    // 4 L gap / ((1-a) sqrt(mK))
  double noise;          // 2 (1-a) sigma^2 / sqrt(mK)
  double noise_drift;    // (2 m sigma^2 / K) (2 tau / ((2-a) a) - 1)
  double heterogeneity;  // 2 m tau^2 kappa^2 / (a^2 K)

  double total() const noexcept { return initial_gap + noise + noise_drift + heterogeneity; }
};

BoundTerms theorem_rhs_terms(const BoundInputs& b);
double theorem_rhs(const BoundInputs& b);

/// True when K meets min_iterations, the regime the bound was derived for.
bool meets_iteration_threshold(const BoundInputs& b);

/// D = 15 eta^2 L^2 tau^2 / alpha^2
double d_constant(double eta, double L, std::size_t tau, double alpha);

/// With eta = theorem_lr(L, m, K) and K >= min_iterations, D <= 1/4 (so 1 - 2D >= 1/2).
/// Throws std::logic_error if that does not hold.
double checked_d_constant(double L, std::size_t m, std::size_t tau, double alpha, std::size_t K);

/// ||grad F(y_k)||^2 for each recorded virtual point.
std::vector<double> grad_norm_series(std::span<const ParamVector> ys, const Ensemble& ensemble);
double avg_grad_norm(std::span<const double> series);

struct RatePoint {
  std::size_t m;
  std::size_t K;
  double avg_grad_norm;  // seed-averaged
};

struct RateFit {
  std::vector<std::pair<double, double>> points;  // (log(mK), log(avg))
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of the fit residuals
};

/// Least-squares slope of log(avg grad norm) against log(mK).
RateFit rate_slope(std::span<const RatePoint> runs);

}  // namespace olab
