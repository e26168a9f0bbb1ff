#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qtf/admm.hpp"
#include "qtf/lp.hpp"
#include "qtf/prox.hpp"
#include "qtf/qtf.hpp"
#include "qtf/rng.hpp"

using namespace qtf;

namespace {

SolverConfig tight_config() {
  SolverConfig cfg;
  cfg.eps_abs = 1e-10;
  cfg.eps_rel = 1e-8;
  cfg.max_iters = 200000;
  return cfg;
}

Signal random_signal(CounterRng& rng, std::size_t n, bool heavy = false) {
  std::vector<double> v(n);
  for (double& x : v) x = heavy ? rng.next_cauchy() : 3.0 * rng.next_normal();
  return Signal(v);
}

}  // namespace

TEST_CASE("check-loss prox examples", "[admm]") {
  CHECK(prox_check(5.0, QuantileLevel(0.5), 2.0) == Catch::Approx(4.0));
  CHECK(prox_check(0.3, QuantileLevel(0.5), 2.0) == 0.0);
  CHECK(prox_check(-1.0, QuantileLevel(0.9), 5.0) == Catch::Approx(-0.5));
  CHECK_THROWS(prox_check(1.0, QuantileLevel(0.5), 0.0));
}

TEST_CASE("soft threshold examples", "[admm]") {
  CHECK(soft_threshold(3.0, 1.0) == Catch::Approx(2.0));
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(1.25, 0.0) == 1.25);
  CHECK(soft_threshold(-4.0, 1.5) == Catch::Approx(-2.5));
}

TEST_CASE("prox maps are nonexpansive", "[admm]") {
  CounterRng rng(99);
  for (int rep = 0; rep < 10000; ++rep) {
    const double tau = 0.02 + 0.96 * rng.next_uniform();
    const double gamma = 0.01 + 5.0 * rng.next_uniform();
    const double kappa = 5.0 * rng.next_uniform();
    const double v1 = 20.0 * (rng.next_uniform() - 0.5);
    const double v2 = 20.0 * (rng.next_uniform() - 0.5);
    const QuantileLevel lvl(tau);
    CHECK(std::abs(prox_check(v1, lvl, gamma) - prox_check(v2, lvl, gamma)) <=
          std::abs(v1 - v2) + 1e-12);
    CHECK(std::abs(soft_threshold(v1, kappa) - soft_threshold(v2, kappa)) <=
          std::abs(v1 - v2) + 1e-12);
  }
}

TEST_CASE("penalty off returns the data", "[admm]") {
  CounterRng rng(4);
  const Signal y = random_signal(rng, 12);
  const SolveResult res = admm_solve(y, QuantileLevel(0.3),
                                     LinearOp::difference(12, DiffOrder(1)), 0.0,
                                     SolverConfig{});
  CHECK(res.objective == 0.0);
  CHECK(res.converged);
  CHECK(check_objective(y, res.theta_hat, QuantileLevel(0.3)) == 0.0);
}

TEST_CASE("huge penalty drives the fit to the constant median", "[admm]") {
  const Signal y({1.0, 2.0, 100.0});
  SolverConfig cfg = tight_config();
  cfg.eps_abs = 1e-12;
  const SolveResult res = admm_solve(y, QuantileLevel(0.5),
                                     LinearOp::difference(3, DiffOrder(1)), 1e6, cfg);
  for (std::size_t i = 0; i < 3; ++i) CHECK(res.theta_hat[i] == Catch::Approx(2.0).margin(1e-3));
  // frozen LP oracle value for this instance
  const double oracle = simplex_solve(
      encode_pqtf_lp(PqtfProblem{y, QuantileLevel(0.5), DiffOrder(1), 1e6}).lp).optimum;
  CHECK(oracle == Catch::Approx(49.5));
  CHECK(res.objective == Catch::Approx(oracle).margin(1e-3 * (1.0 + oracle)));
}

TEST_CASE("moderate penalty matches the LP optimum", "[admm]") {
  const Signal y({0.0, 0.0, 5.0, 5.0, 5.0});
  const PqtfProblem p{y, QuantileLevel(0.5), DiffOrder(1), 1.0};
  const double oracle = simplex_solve(encode_pqtf_lp(p).lp).optimum;
  const SolveResult res = admm_solve(y, QuantileLevel(0.5),
                                     LinearOp::difference(5, DiffOrder(1)), 1.0,
                                     tight_config());
  CHECK(std::abs(res.objective - oracle) <= 1e-4 * (1.0 + std::abs(oracle)));
}

TEST_CASE("objective never falls below the exact optimum", "[admm]") {
  CounterRng rng(17);
  SolverConfig quick;
  quick.max_iters = 50;  // deliberately unconverged iterates
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng.next_uniform() * 6);
    const double lambda = std::pow(10.0, 2.0 * rng.next_uniform() - 1.0);
    const Signal y = random_signal(rng, n);
    const PqtfProblem p{y, QuantileLevel(0.5), DiffOrder(1), lambda};
    const double oracle = simplex_solve(encode_pqtf_lp(p).lp).optimum;
    const SolveResult res = admm_solve(y, QuantileLevel(0.5),
                                       LinearOp::difference(n, DiffOrder(1)), lambda,
                                       quick);
    CHECK(res.objective >= oracle - 1e-6);
  }
}

TEST_CASE("translation equivariance of the objective", "[admm]") {
  CounterRng rng(314);
  SolverConfig cfg;
  cfg.eps_abs = 1e-9;
  cfg.eps_rel = 1e-7;
  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.next_uniform() * 6);
    const double tau = 0.1 + 0.8 * rng.next_uniform();
    const double lambda = std::pow(10.0, 1.5 * rng.next_uniform() - 0.5);
    const double shift = 10.0 * (rng.next_uniform() - 0.5);
    std::vector<double> base(n), shifted(n);
    for (std::size_t i = 0; i < n; ++i) {
      base[i] = 4.0 * (rng.next_uniform() - 0.5);
      shifted[i] = base[i] + shift;
    }
    const LinearOp a = LinearOp::difference(n, DiffOrder(1));  // constants in null space
    const double obj1 =
        admm_solve(Signal(base), QuantileLevel(tau), a, lambda, cfg).objective;
    const double obj2 =
        admm_solve(Signal(shifted), QuantileLevel(tau), a, lambda, cfg).objective;
    CHECK(obj1 == Catch::Approx(obj2).margin(1e-5 * (1.0 + std::abs(obj1))));
  }
}

TEST_CASE("reflection contract between tau and 1 - tau", "[admm]") {
  CounterRng rng(2718);
  SolverConfig cfg;
  cfg.eps_abs = 1e-9;
  cfg.eps_rel = 1e-7;
  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.next_uniform() * 6);
    const double tau = 0.1 + 0.8 * rng.next_uniform();
    const double lambda = std::pow(10.0, 1.5 * rng.next_uniform() - 0.5);
    std::vector<double> y(n), neg(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 4.0 * (rng.next_uniform() - 0.5);
      neg[i] = -y[i];
    }
    const LinearOp a = LinearOp::difference(n, DiffOrder(1));
    const double obj1 = admm_solve(Signal(y), QuantileLevel(tau), a, lambda, cfg).objective;
    const double obj2 =
        admm_solve(Signal(neg), QuantileLevel(1.0 - tau), a, lambda, cfg).objective;
    CHECK(obj1 == Catch::Approx(obj2).margin(1e-5 * (1.0 + std::abs(obj1))));
  }
}

TEST_CASE("iteration cap reports non-convergence", "[admm]") {
  CounterRng rng(5150);
  const Signal y = random_signal(rng, 30, true);
  SolverConfig cfg;
  cfg.max_iters = 3;
  const SolveResult res = admm_solve(y, QuantileLevel(0.5),
                                     LinearOp::difference(30, DiffOrder(2)), 5.0, cfg);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 3);
}

TEST_CASE("warm start reaches the same objective", "[admm]") {
  CounterRng rng(31337);
  const Signal y = random_signal(rng, 20);
  const LinearOp a = LinearOp::difference(20, DiffOrder(1));
  const SolverConfig cfg = tight_config();
  const SolveResult cold = admm_solve(y, QuantileLevel(0.5), a, 2.0, cfg);
  const SolveResult warm =
      admm_solve(y, QuantileLevel(0.5), a, 2.0, cfg, cold.theta_hat);
  CHECK(warm.objective == Catch::Approx(cold.objective).margin(1e-6 * (1.0 + cold.objective)));
  CHECK(warm.iterations <= cold.iterations);
}

TEST_CASE("dimension mismatches are rejected", "[admm]") {
  const Signal y({1.0, 2.0, 3.0});
  CHECK_THROWS(admm_solve(y, QuantileLevel(0.5), LinearOp::difference(4, DiffOrder(1)),
                          1.0, SolverConfig{}));
  CHECK_THROWS(admm_solve(y, QuantileLevel(0.5), LinearOp::difference(3, DiffOrder(1)),
                          -1.0, SolverConfig{}));
}
