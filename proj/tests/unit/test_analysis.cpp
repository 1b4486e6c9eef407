#include <doctest.h>

#include <cmath>
#include <vector>

#include "olab/analysis.hpp"

using namespace olab;

namespace {

BoundInputs base() {
  BoundInputs b;
  b.L = 1.0;
  b.gap = 1.0;
  b.sigma2 = 1.0;
  b.kappa2 = 1.0;
  b.m = 4;
  b.tau = 2;
  b.alpha = 0.5;
  b.K = 3840;
  return b;
}

}  // namespace

TEST_CASE("theorem learning rate") {
  CHECK(theorem_lr(1.0, 7, 7) == 1.0);
  CHECK(theorem_lr(2.0, 4, 400) == doctest::Approx(0.05).epsilon(1e-15));
  RngStream r(1);
  for (int t = 0; t < 100; ++t) {
    const double L = 0.1 + 10.0 * r.uniform();
    const std::size_t m = 1 + r.below(64), K = 1 + r.below(100000);
    CHECK(theorem_lr(L, m, K) * L * std::sqrt(static_cast<double>(K) / static_cast<double>(m)) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS(theorem_lr(0.0, 1, 1));
  CHECK_THROWS(theorem_lr(1.0, 1, 0));
}

TEST_CASE("minimum iteration count") {
  CHECK(min_iterations(1, 1, 1.0) == 60);
  CHECK(min_iterations(16, 2, 0.6) == 10667);
  CHECK(min_iterations(8, 2, 0.6) == 5334);
  CHECK_THROWS(min_iterations(1, 1, 0.0));
  for (std::size_t m = 1; m <= 8; ++m) {
    for (std::size_t tau = 1; tau <= 8; ++tau) {
      for (int a = 1; a <= 9; ++a) {
        const double alpha = a / 10.0;
        CHECK(min_iterations(m + 1, tau, alpha) >= min_iterations(m, tau, alpha));
        CHECK(min_iterations(m, tau + 1, alpha) >= min_iterations(m, tau, alpha));
        if (a < 9) CHECK(min_iterations(m, tau, alpha + 0.1) <= min_iterations(m, tau, alpha));
      }
    }
  }
}

TEST_CASE("right-hand side terms match the reference evaluation") {
  const BoundTerms t = theorem_rhs_terms(base());
  CHECK(t.initial_gap == doctest::Approx(0.06454972243679027).epsilon(1e-14));
  CHECK(t.noise == doctest::Approx(0.008068715304598784).epsilon(1e-14));
  CHECK(t.noise_drift == doctest::Approx(0.009027777777777777).epsilon(1e-14));
  CHECK(t.heterogeneity == doctest::Approx(0.03333333333333333).epsilon(1e-14));
  CHECK(theorem_rhs(base()) == doctest::Approx(0.11497954885250017).epsilon(1e-14));
}

TEST_CASE("noise-free homogeneous RHS is the initial-gap term alone") {
  BoundInputs b = base();
  b.sigma2 = 0.0;
  b.kappa2 = 0.0;
  CHECK(theorem_rhs(b) == theorem_rhs_terms(b).initial_gap);
  CHECK(theorem_rhs(b) == 4.0 * b.L * b.gap / ((1.0 - b.alpha) * std::sqrt(static_cast<double>(b.m * b.K))));
}

TEST_CASE("with tau = 1 the drift factor tends to 1 as alpha tends to 1") {
  BoundInputs b = base();
  b.tau = 1;
  b.alpha = 1.0 - 1e-9;
  const double expect = 2.0 * static_cast<double>(b.m) * b.sigma2 / static_cast<double>(b.K);
  CHECK(theorem_rhs_terms(b).noise_drift == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("RHS is monotone in sigma^2, kappa^2, gap and tau") {
  for (double s2 : {0.0, 0.5, 2.0}) {
    for (double k2 : {0.0, 0.5, 2.0}) {
      for (std::size_t tau : {1, 2, 4}) {
        BoundInputs b = base();
        b.sigma2 = s2;
        b.kappa2 = k2;
        b.tau = tau;
        const double here = theorem_rhs(b);
        BoundInputs up = b;
        up.sigma2 += 0.1;
        CHECK(theorem_rhs(up) > here);
        up = b;
        up.kappa2 += 0.1;
        CHECK(theorem_rhs(up) > here);
        up = b;
        up.gap += 0.1;
        CHECK(theorem_rhs(up) > here);
        up = b;
        up.tau += 1;
        CHECK(theorem_rhs(up) >= here);
      }
    }
  }
}

TEST_CASE("RHS input errors") {
  BoundInputs b = base();
  b.alpha = 1.0;
  CHECK_THROWS(theorem_rhs(b));
  b.alpha = 0.0;
  CHECK_THROWS(theorem_rhs(b));
  b = base();
  b.sigma2 = -1.0;
  CHECK_THROWS(theorem_rhs(b));
}

TEST_CASE("iteration threshold") {
  BoundInputs b = base();
  b.K = min_iterations(b.m, b.tau, b.alpha);
  CHECK(meets_iteration_threshold(b));
  b.K -= 1;
  CHECK_FALSE(meets_iteration_threshold(b));
}

TEST_CASE("D constant") {
  const std::size_t m = 3, tau = 4, K = 50000;
  const double L = 2.5, alpha = 0.4;
  const double eta = theorem_lr(L, m, K);
  CHECK(d_constant(eta, L, tau, alpha) ==
        doctest::Approx(15.0 * m * tau * tau / (alpha * alpha * K)).epsilon(1e-13));
  CHECK(d_constant(0.01, L, 2 * tau, alpha) == doctest::Approx(4.0 * d_constant(0.01, L, tau, alpha)).epsilon(1e-14));
  // K = 60 m tau^2 / alpha^2 exactly: m=1, tau=1, alpha=0.5 gives K=240.
  CHECK(checked_d_constant(1.0, 1, 1, 0.5, 240) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(checked_d_constant(3.0, 2, 2, 0.5, 1920) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(checked_d_constant(1.0, 1, 1, 0.5, 1000) < 0.25);
  // Below the threshold D may exceed 1/4; that is reported, not an error.
  CHECK(checked_d_constant(1.0, 1, 1, 0.5, 239) > 0.25);
}

TEST_CASE("gradient-norm series on the virtual sequence") {
  const QuadraticEnsemble q({1.0}, {ParamVector{1.0}, ParamVector{-1.0}}, 0.0);
  const std::vector<ParamVector> ys{ParamVector{2.0}, ParamVector{0.0}, ParamVector{-0.5}};
  const std::vector<double> s = grad_norm_series(ys, q);
  CHECK(s == std::vector<double>{4.0, 0.0, 0.25});
  CHECK(avg_grad_norm(s) == doctest::Approx(4.25 / 3.0));
  CHECK_THROWS(avg_grad_norm(std::vector<double>{}));

  const QuadraticEnsemble big = make_quadratic(4, 5, 1.0, 10.0, 1.0, RngStream(2));
  RngStream r(3);
  std::vector<ParamVector> pts;
  for (int t = 0; t < 50; ++t) {
    ParamVector x(5);
    for (std::size_t j = 0; j < 5; ++j) x[j] = 3.0 * r.normal();
    pts.push_back(x);
  }
  pts.push_back(big.minimizer());
  const std::vector<double> series = grad_norm_series(pts, big);
  for (double v : series) CHECK(v >= 0.0);
  CHECK(series.back() <= 1e-28);
}

TEST_CASE("rate fit recovers planted slopes") {
  for (double slope : {-0.5, -1.0, -0.25}) {
    std::vector<RatePoint> pts;
    for (std::size_t K : {1000, 2000, 4000, 8000, 16000}) {
      pts.push_back({4, K, 3.0 * std::pow(4.0 * static_cast<double>(K), slope)});
    }
    const RateFit fit = rate_slope(pts);
    CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(fit.residual <= 1e-12);
    CHECK(fit.points.size() == 5);
  }
  const std::vector<RatePoint> flat{{4, 100, 1.0}, {4, 100, 2.0}, {4, 100, 3.0}};
  CHECK_THROWS(rate_slope(flat));
  const std::vector<RatePoint> two{{4, 100, 1.0}, {4, 200, 2.0}};
  CHECK_THROWS(rate_slope(two));
}
