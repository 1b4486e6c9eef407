#include <doctest.h>

#include <cmath>
#include <vector>

#include "olab/algorithms.hpp"
#include "olab/mixing.hpp"

using namespace olab;

namespace {

DenseMatrix outer_ones(const std::vector<double>& v) {
  DenseMatrix M(v.size(), v.size());
  for (std::size_t r = 0; r < v.size(); ++r) {
    for (std::size_t c = 0; c < v.size(); ++c) M(r, c) = v[r];
  }
  return M;
}

DenseMatrix minus(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) - b(r, c);
  }
  return out;
}

StackedState scalars(std::initializer_list<double> xs) {
  StackedState s;
  for (double x : xs) s.columns.push_back(ParamVector{x});
  return s;
}

}  // namespace

TEST_CASE("build_P examples") {
  const MixingMatrix p1 = build_P(1, 0.6);
  CHECK(p1.entries(0, 0) == doctest::Approx(0.4));
  CHECK(p1.entries(0, 1) == doctest::Approx(0.4));
  CHECK(p1.entries(1, 0) == doctest::Approx(0.6));
  CHECK(p1.entries(1, 1) == doctest::Approx(0.6));

  const MixingMatrix p2 = build_P(2, 0.5);
  const double expect[3][3] = {{0.5, 0.0, 0.25}, {0.0, 0.5, 0.25}, {0.5, 0.5, 0.5}};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(p2.entries(r, c) == expect[r][c]);
  }

  const MixingMatrix p0 = build_P(3, 0.0);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(p0.entries(r, c) == (r == c ? 1.0 : 0.0));
    CHECK(p0.entries(r, 3) == doctest::Approx(1.0 / 3.0));
    CHECK(p0.entries(3, r) == 0.0);
  }
  CHECK_THROWS(build_P(2, 1.5));
  CHECK_THROWS(build_P(0, 0.5));
}

TEST_CASE("every generated W is column-stochastic with entries in [0, 1]") {
  for (std::size_t m = 1; m <= 16; ++m) {
    for (int a = 0; a <= 10; ++a) {
      const double alpha = a / 10.0;
      for (std::size_t k = 0; k < 6; ++k) {
        const DenseMatrix W = mixing_for_step(k, 3, m, alpha);
        for (double s : W.column_sums()) CHECK(std::abs(s - 1.0) <= 1e-15);
        for (std::size_t r = 0; r < m + 1; ++r) {
          for (std::size_t c = 0; c < m + 1; ++c) {
            CHECK(W(r, c) >= 0.0);
            CHECK(W(r, c) <= 1.0);
          }
        }
      }
    }
  }
}

TEST_CASE("mixing_for_step is P exactly on sync steps") {
  const DenseMatrix P = build_P(3, 0.4).entries;
  for (std::size_t k = 0; k < 9; ++k) {
    const DenseMatrix W = mixing_for_step(k, 3, 3, 0.4);
    const DenseMatrix& expect = (k + 1) % 3 == 0 ? P : DenseMatrix::identity(4);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 4; ++c) CHECK(W(r, c) == expect(r, c));
    }
  }
}

TEST_CASE("fixed vector") {
  CHECK(fixed_vector(2, 0.5) == std::vector<double>{0.25, 0.25, 0.5});
  CHECK(fixed_vector(3, 1.0) == std::vector<double>{0.0, 0.0, 0.0, 1.0});
  for (std::size_t m = 1; m <= 16; ++m) {
    for (int a = 0; a <= 10; ++a) {
      const double alpha = a / 10.0;
      const std::vector<double> v = fixed_vector(m, alpha);
      const std::vector<double> Pv = build_P(m, alpha).entries.times(v);
      double total = 0.0;
      for (std::size_t i = 0; i <= m; ++i) {
        CHECK(std::abs(Pv[i] - v[i]) <= 1e-14);
        total += v[i];
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("products of mixing matrices keep the fixed vector") {
  RngStream r(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + r.below(8), tau = 1 + r.below(4);
    const double alpha = r.uniform();
    DenseMatrix prod = DenseMatrix::identity(m + 1);
    for (std::size_t k = 0; k < 30; ++k) prod = mixing_for_step(k, tau, m, alpha).times(prod);
    const std::vector<double> v = fixed_vector(m, alpha);
    const std::vector<double> pv = prod.times(v);
    for (std::size_t i = 0; i <= m; ++i) CHECK(std::abs(pv[i] - v[i]) <= 1e-13);
  }
}

TEST_CASE("spectral deviation examples") {
  const MixingMatrix p1 = build_P(1, 0.6);
  CHECK(spectral_deviation(p1.entries, fixed_vector(1, 0.6)) <= 1e-15);
  const MixingMatrix p2 = build_P(2, 0.5);
  CHECK(spectral_deviation(p2.entries, fixed_vector(2, 0.5)) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("zeta never exceeds 1 - alpha over the m and alpha grid") {
  for (std::size_t m = 1; m <= 16; ++m) {
    for (int a = 1; a <= 9; ++a) {
      const double alpha = a / 10.0;
      const double zeta = spectral_deviation(build_P(m, alpha).entries, fixed_vector(m, alpha));
      CHECK(zeta <= (1.0 - alpha) + 1e-12);
    }
  }
}

TEST_CASE("power iteration agrees with the SVD") {
  for (std::size_t m = 2; m <= 16; ++m) {
    for (int a = 1; a <= 9; a += 2) {
      const double alpha = a / 10.0;
      const MixingMatrix P = build_P(m, alpha);
      const DenseMatrix M = minus(P.entries, outer_ones(fixed_vector(m, alpha)));
      const double svd = spectral_norm_svd(M);
      const PowerIterationResult pw = spectral_norm_power(M);
      CHECK(pw.norm == doctest::Approx(svd).epsilon(1e-9));
    }
  }
  RngStream r(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + r.below(10);
    DenseMatrix M(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) M(i, j) = r.normal();
    }
    CHECK(spectral_norm_power(M).norm == doctest::Approx(spectral_norm_svd(M)).epsilon(1e-9));
  }
}

TEST_CASE("power iteration reports non-convergence") {
  // Two equal top singular values with opposite-sign rotation never settle in one iteration.
  DenseMatrix M(2, 2);
  M(0, 0) = 1.0;
  M(1, 1) = 0.999999;
  CHECK_THROWS_AS(spectral_norm_power(M, 1e-300, 1), std::runtime_error);
}

TEST_CASE("large matrices take the power-iteration route") {
  const std::size_t m = 80;
  const double zeta = spectral_deviation(build_P(m, 0.3).entries, fixed_vector(m, 0.3));
  CHECK(zeta <= 0.7 + 1e-12);
  CHECK(zeta == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("PageRank split reconstructs P") {
  for (double alpha : {0.0, 0.5, 1.0, 0.3}) {
    const MixingMatrix P = build_P(2, alpha);
    const PageRankSplit s = pagerank_decompose(P);
    CHECK(s.b == std::vector<double>{0.0, 0.0, 1.0});
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(std::abs((1.0 - alpha) * s.A(r, c) + alpha * s.b[r] - P.entries(r, c)) <= 1e-15);
      }
    }
    for (double col : s.A.column_sums()) CHECK(col == doctest::Approx(1.0));
    if (alpha == 0.0) {
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) CHECK(s.A(r, c) == P.entries(r, c));
      }
    }
  }
}

TEST_CASE("matrix_step examples") {
  const StackedState X = scalars({1.0, 3.0, 0.0});
  const StackedState G = scalars({0.5, -1.0, 0.0});
  const StackedState plain = matrix_step(X, G, DenseMatrix::identity(3), 0.1);
  CHECK(plain.columns[0][0] == doctest::Approx(0.95));
  CHECK(plain.columns[1][0] == doctest::Approx(3.1));
  CHECK(plain.columns[2][0] == 0.0);

  const StackedState consensus = scalars({2.5, 2.5, 2.5});
  const StackedState fixed = matrix_step(consensus, scalars({0.0, 0.0, 0.0}), build_P(2, 0.7).entries, 0.0);
  for (const auto& c : fixed.columns) CHECK(c[0] == doctest::Approx(2.5).epsilon(1e-15));

  CHECK_THROWS(matrix_step(X, scalars({0.5, -1.0, 0.1}), DenseMatrix::identity(3), 0.1));
}

TEST_CASE("one sync step: matrix form matches the per-worker rules") {
  // Oracle: (X - 0.1 G) P for X = (1, 3 | 0), G = (0.5, -1 | 0), alpha = 0.5.
  const StackedState out =
      matrix_step(scalars({1.0, 3.0, 0.0}), scalars({0.5, -1.0, 0.0}), build_P(2, 0.5).entries, 0.1);
  CHECK(out.columns[0][0] == doctest::Approx(0.475).epsilon(1e-15));
  CHECK(out.columns[1][0] == doctest::Approx(1.55).epsilon(1e-15));
  CHECK(out.columns[2][0] == doctest::Approx(1.0125).epsilon(1e-15));

  ClusterState s = ClusterState::initial(2, ParamVector{0.0});
  s.workers = {ParamVector{1.0}, ParamVector{3.0}};
  local_step(s, 0, ParamVector{0.5}, 0.1);
  local_step(s, 1, ParamVector{-1.0}, 0.1);
  pullback(s, 0.5);
  anchor_average(s);
  const StackedState rules = stack(s);
  for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(rules.columns[c][0] - out.columns[c][0]) <= 1e-15);
}

TEST_CASE("virtual point") {
  const std::vector<double> v = fixed_vector(2, 0.5);
  CHECK(virtual_point(scalars({1.0, 3.0, 4.0}), v) == ParamVector{3.0});
  CHECK(virtual_point(scalars({-1.5, -1.5, -1.5}), fixed_vector(2, 0.3))[0] == doctest::Approx(-1.5).epsilon(1e-15));
  CHECK(virtual_point(scalars({7.0, 9.0, 2.0}), fixed_vector(2, 1.0)) == ParamVector{2.0});
}
