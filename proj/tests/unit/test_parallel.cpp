#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "olab/algorithms.hpp"
#include "olab/objectives.hpp"
#include "olab/parallel.hpp"

using namespace olab;

TEST_CASE("parallel_map returns results in index order") {
  const auto square = [](std::size_t i) { return static_cast<long long>(i * i); };
  for (std::size_t jobs : {0, 1, 2, 4}) {
    CHECK(parallel_map(100, square, jobs) == serial_map(100, square));
  }
  CHECK(parallel_map(0, square).empty());
}

TEST_CASE("seed ensembles agree bitwise between the serial and parallel maps") {
  const QuadraticEnsemble q = make_quadratic(4, 6, 1.0, 10.0, 1.0, RngStream(1));
  AlgorithmSpec spec;
  spec.kind = AlgorithmKind::OverlapLocalMomentum;
  const auto run = [&](std::size_t i) {
    HyperParams hp;
    hp.m = 4;
    hp.d = 6;
    hp.tau = 3;
    hp.K = 300;
    hp.eta = 0.05;
    hp.seed = 100 + i;
    return run_training(spec, hp, q, ParamVector(6, 1.0), {}).avg_grad_norm_sq;
  };
  CHECK(parallel_map(12, run, 3) == serial_map(12, run));
}

TEST_CASE("the lowest-index failure is rethrown") {
  const auto fn = [](std::size_t i) -> int {
    if (i == 7) throw std::runtime_error("job 7");
    if (i == 3) throw std::invalid_argument("job 3");
    return static_cast<int>(i);
  };
  CHECK_THROWS_WITH_AS(parallel_map(10, fn, 2), "job 3", std::invalid_argument);
}
