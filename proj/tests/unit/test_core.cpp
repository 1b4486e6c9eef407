#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "olab/core.hpp"

using namespace olab;

TEST_CASE("axpy examples") {
  const ParamVector x{1.0, 2.0};
  const ParamVector y{3.0, 4.0};
  CHECK(axpy(0.0, x, y) == y);
  CHECK(axpy(1.0, ParamVector{-3.0, -4.0}, y) == ParamVector{0.0, 0.0});
  CHECK(axpy(2.0, x, y) == ParamVector{5.0, 8.0});
}

TEST_CASE("axpy rejects mismatched dimensions and non-finite results") {
  CHECK_THROWS_AS(axpy(1.0, ParamVector{1.0}, ParamVector{1.0, 2.0}), DimensionError);
  const double big = std::numeric_limits<double>::max();
  CHECK_THROWS_AS(axpy(2.0, ParamVector{big}, ParamVector{0.0}), NonFiniteError);
  ParamVector y{1.0};
  CHECK_THROWS_AS(axpy_inplace(std::numeric_limits<double>::infinity(), ParamVector{1.0}, y), NonFiniteError);
}

TEST_CASE("integer-valued arithmetic is exact") {
  RngStream r(3);
  for (int trial = 0; trial < 100; ++trial) {
    ParamVector x(5), y(5);
    for (std::size_t j = 0; j < 5; ++j) {
      x[j] = static_cast<double>(static_cast<int>(r.below(2001)) - 1000);
      y[j] = static_cast<double>(static_cast<int>(r.below(2001)) - 1000);
    }
    const double a = static_cast<double>(static_cast<int>(r.below(21)) - 10);
    const ParamVector z = axpy(a, x, y);
    for (std::size_t j = 0; j < 5; ++j) {
      const long long expect = static_cast<long long>(a) * static_cast<long long>(x[j]) + static_cast<long long>(y[j]);
      CHECK(z[j] == static_cast<double>(expect));
    }
  }
}

TEST_CASE("vector helpers") {
  const ParamVector x{3.0, 4.0};
  CHECK(norm_sq(x) == 25.0);
  CHECK(dot(x, ParamVector{1.0, -1.0}) == -1.0);
  CHECK(max_abs_diff(x, ParamVector{3.5, 2.0}) == 2.0);
  ParamVector s = x;
  scale_inplace(0.5, s);
  CHECK(s == ParamVector{1.5, 2.0});
}

TEST_CASE("mean_of is exact on equal inputs and averages in index order") {
  const ParamVector w{0.1, -7.3, 1e-300};
  const std::vector<ParamVector> same(7, w);
  CHECK(mean_of(same) == w);
  const std::vector<ParamVector> two{ParamVector{1.0}, ParamVector{3.0}};
  CHECK(mean_of(two) == ParamVector{2.0});
  CHECK_THROWS(mean_of(std::vector<ParamVector>{}));
}

TEST_CASE("split streams are deterministic and distinct") {
  const RngStream root(7);
  RngStream a = root.split(0, 4, "noise");
  RngStream b = root.split(0, 4, "noise");
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  CHECK(root.split(0, 4, "noise").next_u64() != root.split(1, 4, "noise").next_u64());
  CHECK(root.split(0, 4, "noise").next_u64() != root.split(0, 4, "center").next_u64());

  RngStream c = RngStream(7).split(0, 4, "noise");
  RngStream d = RngStream(8).split(0, 4, "noise");
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += c.next_u64() == d.next_u64();
  CHECK(equal == 0);

  CHECK_THROWS_AS(root.split(4, 4, "noise"), std::out_of_range);
  CHECK(split_rng(root, 2, 4, "x").key() == root.split(2, 4, "x").key());
}

TEST_CASE("stream draws do not depend on consumption order of other streams") {
  const RngStream root(21);
  RngStream a1 = root.split(0, 2, "noise");
  RngStream b1 = root.split(1, 2, "noise");
  const double a_first = a1.normal();
  const double b_first = b1.normal();

  RngStream b2 = root.split(1, 2, "noise");
  RngStream a2 = root.split(0, 2, "noise");
  CHECK(b2.normal() == b_first);
  CHECK(a2.normal() == a_first);
}

TEST_CASE("generator output is pinned to the reference definition") {
  // Values from tests/oracles/compute_oracles.py; replay of stored runs depends on them.
  RngStream r(0);
  CHECK(r.next_u64() == 0x847e147ad541881eULL);
  CHECK(r.next_u64() == 0x113b8b3d4875d7bcULL);
  CHECK(r.next_u64() == 0xf0907c36894b1dc2ULL);
  RngStream w = RngStream(7).split(1, 4, "noise");
  CHECK(w.next_u64() == 0x9e9f99b256003da7ULL);
  CHECK(w.next_u64() == 0x9a7a66967a674dacULL);
  CHECK(RngStream(0).uniform() == 0.5175488281140642);
}

TEST_CASE("uniform, normal, bernoulli and below have the right moments") {
  RngStream r(99);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  int hits = 0;
  std::vector<int> bins(5, 0);
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
    hits += r.bernoulli(0.3);
    ++bins[r.below(5)];
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(static_cast<double>(hits) / n == doctest::Approx(0.3).epsilon(0.02));
  for (int b : bins) CHECK(static_cast<double>(b) / n == doctest::Approx(0.2).epsilon(0.03));
}

TEST_CASE("HyperParams validation") {
  HyperParams hp;
  hp.m = 4;
  hp.d = 3;
  hp.tau = 2;
  hp.K = 10;
  CHECK_NOTHROW(hp.validate(false));
  hp.alpha = 1.0;
  CHECK_THROWS_AS(hp.validate(false), ConfigError);
  CHECK_NOTHROW(hp.validate(true));
  hp.alpha = 0.0;
  CHECK_THROWS_AS(hp.validate(false), ConfigError);
  hp.alpha = 1.5;
  CHECK_THROWS_AS(hp.validate(true), ConfigError);
  hp.alpha = 0.6;
  hp.beta = 1.0;
  CHECK_THROWS_AS(hp.validate(false), ConfigError);
  hp.beta = 0.7;
  hp.eta = -0.1;
  CHECK_THROWS_AS(hp.validate(false), ConfigError);
  hp.eta.reset();
  CHECK(hp.eta_from_theorem());
  CHECK_NOTHROW(hp.validate(false));
  hp.m = 0;
  CHECK_THROWS_AS(hp.validate(false), ConfigError);
}
