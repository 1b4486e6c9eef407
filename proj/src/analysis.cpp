#include "olab/analysis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace olab {

void BoundInputs::validate() const {
  if (!(L > 0.0)) throw std::invalid_argument("bound: L must be > 0");
  if (!(gap >= 0.0) || !(sigma2 >= 0.0) || !(kappa2 >= 0.0)) {
    throw std::invalid_argument("bound: gap, sigma2 and kappa2 must be >= 0");
  }
  if (m < 1 || tau < 1 || K < 1) throw std::invalid_argument("bound: m, tau and K must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bound: alpha must lie in (0, 1)");
}

double theorem_lr(double L, std::size_t m, std::size_t K) {
  if (!(L > 0.0)) throw std::invalid_argument("theorem_lr: L must be > 0");
  if (K < 1) throw std::invalid_argument("theorem_lr: K must be >= 1");
  return std::sqrt(static_cast<double>(m) / static_cast<double>(K)) / L;
}

std::uint64_t min_iterations(std::size_t m, std::size_t tau, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("min_iterations: alpha must lie in (0, 1]");
  const double t = static_cast<double>(tau);
  const double raw = 60.0 * static_cast<double>(m) * t * t / (alpha * alpha);
  // Guard against raw landing a hair above an integer through rounding.
  const double nearest = std::round(raw);
  if (std::abs(raw - nearest) <= 1e-9 * nearest) return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(raw));
}

BoundTerms theorem_rhs_terms(const BoundInputs& b) {
  b.validate();
  const double m = static_cast<double>(b.m);
  const double K = static_cast<double>(b.K);
  const double tau = static_cast<double>(b.tau);
  const double a = b.alpha;
  const double root_mk = std::sqrt(m * K);
  BoundTerms t{};
  t.initial_gap = 4.0 * b.L * b.gap / ((1.0 - a) * root_mk);
  t.noise = 2.0 * (1.0 - a) * b.sigma2 / root_mk;
  t.noise_drift = (2.0 * m * b.sigma2 / K) * (2.0 * tau / ((2.0 - a) * a) - 1.0);
  t.heterogeneity = 2.0 * m * tau * tau * b.kappa2 / (a * a * K);
  return t;
}

double theorem_rhs(const BoundInputs& b) { return theorem_rhs_terms(b).total(); }

bool meets_iteration_threshold(const BoundInputs& b) { return b.K >= min_iterations(b.m, b.tau, b.alpha); }

double d_constant(double eta, double L, std::size_t tau, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("d_constant: alpha must be > 0");
  const double t = static_cast<double>(tau);
  return 15.0 * eta * eta * L * L * t * t / (alpha * alpha);
}

double checked_d_constant(double L, std::size_t m, std::size_t tau, double alpha, std::size_t K) {
  const double D = d_constant(theorem_lr(L, m, K), L, tau, alpha);
  if (K >= min_iterations(m, tau, alpha) && D > 0.25 + 1e-12) {
    throw std::logic_error("d_constant: D = " + std::to_string(D) + " exceeds 1/4 above the iteration threshold");
  }
  return D;
}

std::vector<double> grad_norm_series(std::span<const ParamVector> ys, const Ensemble& ensemble) {
  if (ys.empty()) throw std::invalid_argument("grad_norm_series: no virtual points recorded");
  std::vector<double> out;
  out.reserve(ys.size());
  for (const auto& y : ys) out.push_back(norm_sq(ensemble.global_grad(y)));
  return out;
}

double avg_grad_norm(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("avg_grad_norm: empty series");
  double total = 0.0;
  for (double v : series) total += v;
  return total / static_cast<double>(series.size());
}

RateFit rate_slope(std::span<const RatePoint> runs) {
  if (runs.size() < 3) throw std::invalid_argument("rate_slope: need at least 3 points");
  RateFit fit;
  for (const auto& r : runs) {
    if (!(r.avg_grad_norm > 0.0)) throw std::invalid_argument("rate_slope: averages must be > 0");
    fit.points.emplace_back(std::log(static_cast<double>(r.m) * static_cast<double>(r.K)), std::log(r.avg_grad_norm));
  }
  const double n = static_cast<double>(fit.points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : fit.points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("rate_slope: degenerate abscissae (identical mK)");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : fit.points) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  if (!std::isfinite(fit.slope)) throw std::runtime_error("rate_slope: non-finite slope");
  return fit;
}

}  // namespace olab
