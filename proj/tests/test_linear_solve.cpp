#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qtf/linear_op.hpp"
#include "qtf/linear_solve.hpp"
#include "qtf/rng.hpp"
#include "qtf/signal.hpp"

using namespace qtf;

namespace {

// dense Gaussian elimination with partial pivoting; the reference solver
std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i) {
      if (std::abs(a[i * n + col]) > std::abs(a[piv * n + col])) piv = i;
    }
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = a[i * n + col] / a[col * n + col];
      for (std::size_t j = col; j < n; ++j) a[i * n + j] -= f * a[col * n + j];
      b[i] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= a[ii * n + j] * x[j];
    x[ii] = s / a[ii * n + ii];
  }
  return x;
}

std::vector<double> normal_dense(const LinearOp& op, double rho1, double rho2) {
  const std::size_t n = op.cols();
  std::vector<double> m(n * n, 0.0), unit(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    unit[j] = 1.0;
    const std::vector<double> col = op.apply_adjoint(op.apply(unit));
    unit[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) m[i * n + j] = rho2 * col[i];
    m[j * n + j] += rho1;
  }
  return m;
}

}  // namespace

TEST_CASE("diagonal system with no penalty rows", "[linear_solve]") {
  const Signal x = banded_spd_solve(LinearOp::zero(2), Signal({4.0, 6.0}), 2.0, 1.0);
  CHECK(x[0] == Catch::Approx(2.0));
  CHECK(x[1] == Catch::Approx(3.0));
}

TEST_CASE("tridiagonal system from the first-difference operator", "[linear_solve]") {
  // (I + D^T D) theta = (1,1,1): frozen from the dense elimination oracle
  const LinearOp d = LinearOp::difference(3, DiffOrder(1));
  const std::vector<double> oracle =
      gauss_solve(normal_dense(d, 1.0, 1.0), {1.0, 1.0, 1.0});
  CHECK(oracle[0] == Catch::Approx(1.0));
  CHECK(oracle[1] == Catch::Approx(1.0));
  CHECK(oracle[2] == Catch::Approx(1.0));
  const Signal x = banded_spd_solve(d, Signal({1.0, 1.0, 1.0}), 1.0, 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(x[i] == Catch::Approx(oracle[i]).margin(1e-12));
}

TEST_CASE("random banded systems satisfy the residual contract", "[linear_solve]") {
  CounterRng rng(404);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng.next_uniform() * 20);
    const std::size_t r = 1 + static_cast<std::size_t>(rng.next_uniform() * 3);
    if (n <= r) continue;
    const LinearOp a = LinearOp::difference(n, DiffOrder(r));
    std::vector<double> rhs(n);
    double rhs_norm = 0.0;
    for (double& v : rhs) {
      v = 10.0 * (rng.next_uniform() - 0.5);
      rhs_norm += v * v;
    }
    rhs_norm = std::sqrt(rhs_norm);
    const double rho1 = 0.5 + rng.next_uniform();
    const double rho2 = 0.5 + 2.0 * rng.next_uniform();
    const Signal x = banded_spd_solve(a, Signal(rhs), rho1, rho2);
    // residual check against the operator itself
    const std::vector<double> ax = a.apply_adjoint(a.apply(x.values()));
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = rho1 * x[i] + rho2 * ax[i] - rhs[i];
      res += ri * ri;
    }
    CHECK(std::sqrt(res) <= 1e-8 * (1.0 + rhs_norm));

    // against the dense oracle
    const std::vector<double> oracle = gauss_solve(normal_dense(a, rho1, rho2), rhs);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(x[i] == Catch::Approx(oracle[i]).margin(1e-8));
    }
  }
}

TEST_CASE("dense fallback for wide operators", "[linear_solve]") {
  CounterRng rng(11);
  std::vector<double> entries(6 * 10);
  for (double& v : entries) v = rng.next_uniform() - 0.5;
  const LinearOp a = LinearOp::dense(6, 10, entries);
  REQUIRE(a.band_width() == 9);
  std::vector<double> rhs(10);
  for (double& v : rhs) v = rng.next_uniform();
  const Signal x = banded_spd_solve(a, Signal(rhs), 1.0, 1.0);
  const std::vector<double> oracle = gauss_solve(normal_dense(a, 1.0, 1.0), rhs);
  for (std::size_t i = 0; i < 10; ++i) CHECK(x[i] == Catch::Approx(oracle[i]).margin(1e-9));
}

TEST_CASE("conjugate gradient path for wide-band lattices", "[linear_solve]") {
  // side 140 in 2-d exceeds the banded limit, so the solve runs through CG
  const std::size_t side = 140;
  const LinearOp a = LinearOp::lattice_incidence(side, 2, 1.0 / static_cast<double>(side));
  REQUIRE(a.band_width() > 128);
  REQUIRE(a.cols() > 4096);
  CounterRng rng(2024);
  std::vector<double> rhs(a.cols());
  double rhs_norm = 0.0;
  for (double& v : rhs) {
    v = rng.next_uniform() - 0.5;
    rhs_norm += v * v;
  }
  rhs_norm = std::sqrt(rhs_norm);
  const Signal x = banded_spd_solve(a, Signal(rhs), 1.0, 1.0);
  const std::vector<double> ax = a.apply_adjoint(a.apply(x.values()));
  double res = 0.0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const double ri = x[i] + ax[i] - rhs[i];
    res += ri * ri;
  }
  CHECK(std::sqrt(res) <= 1e-8 * (1.0 + rhs_norm));
}

TEST_CASE("indefinite matrices are rejected", "[linear_solve]") {
  BandMatrix bad(3, 1);
  bad.at(0, 0) = 1.0;
  bad.at(0, 1) = -2.0;  // negative diagonal entry
  bad.at(0, 2) = 1.0;
  CHECK_THROWS_AS(BandedCholesky(bad), factorization_error);
  CHECK_THROWS(banded_spd_solve(LinearOp::zero(2), Signal({1.0, 1.0}), 0.0, 1.0));
}
