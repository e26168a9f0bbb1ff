#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtf/admm.hpp"
#include "qtf/lattice.hpp"
#include "qtf/linear_op.hpp"
#include "qtf/parallel.hpp"
#include "qtf/qtf.hpp"
#include "qtf/quantile_lasso.hpp"
#include "qtf/rng.hpp"
#include "qtf/scenarios.hpp"
#include "qtf/signal.hpp"

namespace qtf {

/// Grid of log10 effective penalties (the l1 weight actually applied).
struct TuningGrid {
  std::vector<double> log10_lambda_eff;

  /// The benchmark default: 300 evenly spaced points on [1, 4.5].
  static TuningGrid standard() { return linspace(1.0, 4.5, 300); }

  static TuningGrid linspace(double lo, double hi, std::size_t count) {
    if (count == 0) throw std::invalid_argument("grid: needs >= 1 point");
    if (count > 1 && !(lo < hi)) throw std::invalid_argument("grid: needs lo < hi");
    TuningGrid g;
    g.log10_lambda_eff.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      g.log10_lambda_eff[i] =
          (count == 1) ? lo
                       : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return g;
  }

  void validate() const {
    if (log10_lambda_eff.empty()) throw std::invalid_argument("grid: empty");
    for (std::size_t i = 0; i + 1 < log10_lambda_eff.size(); ++i) {
      if (!(log10_lambda_eff[i] < log10_lambda_eff[i + 1])) {
        throw std::invalid_argument("grid: values must be strictly increasing");
      }
    }
  }

  std::size_t size() const { return log10_lambda_eff.size(); }
};

inline constexpr const char* kBicFormula =
    "BIC(lambda) = 2n*log(max(check_objective/n, 1e-12)) + df*log(n), df = knots + r";

struct BicPoint {
  std::size_t grid_index = 0;
  double log10_lambda_eff = 0.0;
  double check_objective = 0.0;
  std::size_t df = 0;
  double bic = 0.0;
  bool converged = false;
  bool skipped = false;
};

struct BicSelection {
  double lambda = 0.0;
  double lambda_eff = 0.0;
  double log10_lambda_eff = 0.0;
  std::size_t grid_index = 0;
  std::vector<BicPoint> trace;
};

/// Pick the penalty minimizing the BIC over the grid (ties go to the
/// larger penalty). Points whose solve fails are skipped and flagged.
inline BicSelection bic_select(const Signal& y, QuantileLevel tau, DiffOrder r,
                               const TuningGrid& grid, const SolverConfig& cfg) {
  grid.validate();
  const std::size_t n = y.size();
  const double scale = detail::int_pow(static_cast<double>(n), r.value() - 1);
  const double eps = df_epsilon(y);
  const double logn = std::log(static_cast<double>(n));
  AdmmPath path(y, tau, LinearOp::difference(n, r), cfg);

  BicSelection sel;
  sel.trace.assign(grid.size(), BicPoint{});
  // sweep from the largest penalty down so warm starts track the path
  for (std::size_t idx = grid.size(); idx-- > 0;) {
    BicPoint& pt = sel.trace[idx];
    pt.grid_index = idx;
    pt.log10_lambda_eff = grid.log10_lambda_eff[idx];
    const double lambda_eff = std::pow(10.0, pt.log10_lambda_eff);
    try {
      SolveResult res = path.solve(lambda_eff);
      pt.check_objective =
          detail::check_objective_raw(y.values(), res.theta_hat.values(), tau.value());
      pt.df = knot_count(res.theta_hat, r, eps) + r.value();
      pt.bic = 2.0 * static_cast<double>(n) *
                   std::log(std::max(pt.check_objective / static_cast<double>(n), 1e-12)) +
               static_cast<double>(pt.df) * logn;
      pt.converged = res.converged;
    } catch (const factorization_error&) {
      pt.skipped = true;
    }
  }

  bool found = false;
  double best = 0.0;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const BicPoint& pt = sel.trace[idx];
    if (pt.skipped) continue;
    if (!found || pt.bic <= best) {  // <= : ties resolve to the larger penalty
      found = true;
      best = pt.bic;
      sel.grid_index = idx;
    }
  }
  if (!found) throw std::runtime_error("bic_select: every grid point failed");
  sel.log10_lambda_eff = grid.log10_lambda_eff[sel.grid_index];
  sel.lambda_eff = std::pow(10.0, sel.log10_lambda_eff);
  sel.lambda = sel.lambda_eff / scale;
  return sel;
}

enum class Method { Pqtf1, Pqtf2, Cqtf, Qtvd, L1qr };
enum class TuningRule { OracleGrid, Bic, Fixed };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Pqtf1: return "pqtf1";
    case Method::Pqtf2: return "pqtf2";
    case Method::Cqtf: return "cqtf";
    case Method::Qtvd: return "qtvd";
    case Method::L1qr: return "l1qr";
  }
  return "?";
}

inline const char* tuning_name(TuningRule t) {
  switch (t) {
    case TuningRule::OracleGrid: return "oracle-grid";
    case TuningRule::Bic: return "bic";
    case TuningRule::Fixed: return "fixed";
  }
  return "?";
}

/// Full description of one Monte Carlo experiment.
struct ExperimentSpec {
  ScenarioSpec scenario;
  double tau = 0.5;
  Method method = Method::Pqtf1;
  std::size_t order = 1;  // difference order for Cqtf (Pqtf1/Pqtf2 imply theirs)
  TuningRule tuning = TuningRule::OracleGrid;
  TuningGrid grid = TuningGrid::standard();
  std::size_t replicates = 100;
  double fixed_lambda = std::numeric_limits<double>::quiet_NaN();
  double fixed_budget = std::numeric_limits<double>::quiet_NaN();  // NaN: budget of the truth
  SolverConfig solver;
  std::size_t threads = 0;

  std::size_t effective_order() const {
    switch (method) {
      case Method::Pqtf1: return 1;
      case Method::Pqtf2: return 2;
      default: return order;
    }
  }

  void validate() const {
    scenario.validate();
    QuantileLevel check_tau(tau);
    solver.validate();
    if (replicates == 0) throw std::invalid_argument("experiment: replicates must be >= 1");
    switch (method) {
      case Method::Pqtf1:
      case Method::Pqtf2:
        if (tuning != TuningRule::Fixed) grid.validate();
        if (tuning == TuningRule::Fixed && !(fixed_lambda >= 0.0)) {
          throw std::invalid_argument("experiment: fixed tuning needs --lambda >= 0");
        }
        break;
      case Method::Cqtf:
        if (tuning != TuningRule::Fixed) {
          throw std::invalid_argument("experiment: cqtf expects fixed (budget) tuning");
        }
        break;
      case Method::Qtvd: {
        if (scenario.id > 2) {
          throw std::invalid_argument(
              "experiment: qtvd pairs with scenarios 1 (normal) or 2 (cauchy)");
        }
        const auto side = static_cast<std::size_t>(std::llround(
            std::sqrt(static_cast<double>(scenario.n))));
        if (side * side != scenario.n) {
          throw std::invalid_argument("experiment: qtvd needs n to be a perfect square");
        }
        if (tuning == TuningRule::Bic) {
          throw std::invalid_argument("experiment: qtvd supports oracle-grid or fixed tuning");
        }
        if (tuning != TuningRule::Fixed) grid.validate();
        break;
      }
      case Method::L1qr:
        if (scenario.id > 2) {
          throw std::invalid_argument(
              "experiment: l1qr pairs with scenarios 1 (normal) or 2 (cauchy)");
        }
        if (tuning != TuningRule::Fixed) {
          throw std::invalid_argument("experiment: l1qr expects fixed (budget) tuning");
        }
        break;
    }
  }
};

/// One fitted point: a replicate at a grid index (0 when no grid applies).
struct ReplicateRow {
  std::size_t replicate = 0;
  std::size_t grid_index = 0;
  double log10_lambda_eff = 0.0;
  double lambda_eff = 0.0;
  double lambda = 0.0;
  double mse = 0.0;
  double delta_n_sq = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

struct MetricSummary {
  double average = 0.0;
  double std_error = 0.0;
  double average_x10 = 0.0;
  std::size_t grid_index = 0;
  double log10_lambda_eff = 0.0;
};

struct GridAggregate {
  double log10_lambda_eff = 0.0;
  double avg_mse = 0.0;
  double avg_delta_n_sq = 0.0;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<ReplicateRow> rows;            // one per replicate per grid point
  std::vector<GridAggregate> grid_average;   // grid tunings only
  std::vector<double> baseline_mse;          // raw data vs truth, per replicate
  std::vector<double> baseline_delta_n_sq;
  MetricSummary mse;    // headline per the tuning protocol
  MetricSummary delta;  // same for the Huber-type risk
  double runtime_sec = 0.0;
  std::size_t failed_points = 0;
  std::string bic_formula = kBicFormula;
};

namespace detail {

struct TruthAndData {
  std::vector<double> truth;  // tau-quantile vector
  std::vector<double> y;
};

inline RiskValue metrics_of(const std::vector<double>& fit,
                            const std::vector<double>& truth) {
  RiskValue out;
  double hub = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    const double d = fit[i] - truth[i];
    const double a = std::abs(d);
    hub += std::min(a, a * a);
    sq += d * d;
  }
  out.delta_n_sq = hub / static_cast<double>(fit.size());
  out.mse = sq / static_cast<double>(fit.size());
  return out;
}

// Quadrant pattern used by the lattice robustness benchmark.
inline LatticeSignal lattice_truth(std::size_t side) {
  std::vector<double> v(side * side);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      v[i * side + j] = ((i < side / 2) != (j < side / 2)) ? 1.0 : 0.0;
    }
  }
  return LatticeSignal(std::move(v), side, 2);
}

inline TruthAndData lattice_replicate(const ExperimentSpec& spec, std::size_t rep) {
  const auto side = static_cast<std::size_t>(
      std::llround(std::sqrt(static_cast<double>(spec.scenario.n))));
  const LatticeSignal base = lattice_truth(side);
  CounterRng rng = CounterRng::stream(spec.scenario.seed, rep);
  TruthAndData out;
  out.y.resize(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double eps = (spec.scenario.id == 1) ? rng.next_normal() : rng.next_cauchy();
    out.y[i] = base.values()[i] + eps;
  }
  const double q = (spec.scenario.id == 1) ? normal_quantile(spec.tau)
                                           : cauchy_quantile(spec.tau);
  out.truth = base.values();
  for (double& t : out.truth) t += q;
  return out;
}

// Fixed design and sparse coefficients for the regression benchmark; the
// design is shared by every replicate (fixed-design setting), columns
// normalized to norm sqrt(n).
struct RegressionSetup {
  DesignMatrix X;
  std::vector<double> beta_star;
  std::vector<double> theta_star;  // X beta_star
};

inline RegressionSetup regression_setup(const ExperimentSpec& spec) {
  const std::size_t n = spec.scenario.n;
  const std::size_t p = std::max<std::size_t>(8, n / 8);
  CounterRng rng = CounterRng::stream(spec.scenario.seed, 0x58A03C1FULL);
  std::vector<double> xs(n * p);
  for (double& v : xs) v = rng.next_normal();
  for (std::size_t j = 0; j < p; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += xs[i * p + j] * xs[i * p + j];
    const double f = std::sqrt(static_cast<double>(n)) / std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) xs[i * p + j] *= f;
  }
  DesignMatrix X(n, p, std::move(xs));
  std::vector<double> beta(p, 0.0);
  beta[0] = 1.0;
  beta[1] = -1.0;
  beta[2] = 0.5;
  std::vector<double> theta;
  X.multiply(beta, theta);
  return RegressionSetup{std::move(X), std::move(beta), std::move(theta)};
}

inline MetricSummary summarize_at(const std::vector<ReplicateRow>& rows,
                                  std::size_t grid_size, std::size_t grid_index,
                                  bool use_delta) {
  // mean and standard error across replicates at one grid point
  MetricSummary s;
  s.grid_index = grid_index;
  std::size_t count = 0;
  double mean = 0.0;
  for (std::size_t i = grid_index; i < rows.size(); i += grid_size) {
    mean += use_delta ? rows[i].delta_n_sq : rows[i].mse;
    ++count;
  }
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (std::size_t i = grid_index; i < rows.size(); i += grid_size) {
    const double v = (use_delta ? rows[i].delta_n_sq : rows[i].mse) - mean;
    var += v * v;
  }
  s.average = mean;
  s.std_error = count > 1 ? std::sqrt(var / static_cast<double>(count - 1) /
                                      static_cast<double>(count))
                          : 0.0;
  s.average_x10 = 10.0 * mean;
  if (!rows.empty()) s.log10_lambda_eff = rows[grid_index].log10_lambda_eff;
  return s;
}

}  // namespace detail

/// Run one Monte Carlo experiment. Deterministic given (scenario, seed,
/// config): replicates use derived streams and the aggregation is an
/// ordered reduction, so thread count does not change the output.
inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.spec = spec;
  const std::size_t reps = spec.replicates;
  const QuantileLevel tau(spec.tau);
  const std::size_t r = spec.effective_order();

  const bool grid_based = (spec.method == Method::Pqtf1 || spec.method == Method::Pqtf2 ||
                           spec.method == Method::Qtvd) &&
                          spec.tuning != TuningRule::Fixed;
  const bool bic_based = spec.tuning == TuningRule::Bic;
  const std::size_t grid_size = (grid_based && !bic_based) ? spec.grid.size() : 1;

  report.rows.assign(reps * grid_size, ReplicateRow{});
  report.baseline_mse.assign(reps, 0.0);
  report.baseline_delta_n_sq.assign(reps, 0.0);
  std::vector<std::size_t> failures(reps, 0);

  std::optional<detail::RegressionSetup> regression;
  if (spec.method == Method::L1qr) regression.emplace(detail::regression_setup(spec));

  parallel_for(reps, spec.threads, [&](std::size_t rep) {
    switch (spec.method) {
      case Method::Pqtf1:
      case Method::Pqtf2: {
        const Signal truth = true_quantile(spec.scenario, tau);
        const Signal y = generate(spec.scenario, rep);
        const RiskValue base = detail::metrics_of(y.values(), truth.values());
        report.baseline_mse[rep] = base.mse;
        report.baseline_delta_n_sq[rep] = base.delta_n_sq;
        const double scale =
            detail::int_pow(static_cast<double>(y.size()), r - 1);
        if (bic_based) {
          const BicSelection sel =
              bic_select(y, tau, DiffOrder(r), spec.grid, spec.solver);
          PqtfResult fit = pqtf_fit(PqtfProblem{y, tau, DiffOrder(r), sel.lambda},
                                    spec.solver);
          ReplicateRow& row = report.rows[rep];
          row.replicate = rep;
          row.grid_index = sel.grid_index;
          row.log10_lambda_eff = sel.log10_lambda_eff;
          row.lambda_eff = sel.lambda_eff;
          row.lambda = sel.lambda;
          const RiskValue m = detail::metrics_of(fit.solve.theta_hat.values(),
                                                 truth.values());
          row.mse = m.mse;
          row.delta_n_sq = m.delta_n_sq;
          row.iterations = fit.solve.iterations;
          row.converged = fit.solve.converged;
        } else if (spec.tuning == TuningRule::Fixed) {
          PqtfResult fit = pqtf_fit(
              PqtfProblem{y, tau, DiffOrder(r), spec.fixed_lambda}, spec.solver);
          ReplicateRow& row = report.rows[rep];
          row.replicate = rep;
          row.lambda = spec.fixed_lambda;
          row.lambda_eff = spec.fixed_lambda * scale;
          row.log10_lambda_eff = std::log10(std::max(row.lambda_eff, 1e-300));
          const RiskValue m = detail::metrics_of(fit.solve.theta_hat.values(),
                                                 truth.values());
          row.mse = m.mse;
          row.delta_n_sq = m.delta_n_sq;
          row.iterations = fit.solve.iterations;
          row.converged = fit.solve.converged;
        } else {
          AdmmPath path(y, tau, LinearOp::difference(y.size(), DiffOrder(r)),
                        spec.solver);
          for (std::size_t g = spec.grid.size(); g-- > 0;) {
            ReplicateRow& row = report.rows[rep * grid_size + g];
            row.replicate = rep;
            row.grid_index = g;
            row.log10_lambda_eff = spec.grid.log10_lambda_eff[g];
            row.lambda_eff = std::pow(10.0, row.log10_lambda_eff);
            row.lambda = row.lambda_eff / scale;
            SolveResult res = path.solve(row.lambda_eff);
            const RiskValue m =
                detail::metrics_of(res.theta_hat.values(), truth.values());
            row.mse = m.mse;
            row.delta_n_sq = m.delta_n_sq;
            row.iterations = res.iterations;
            row.converged = res.converged;
            if (!res.converged) ++failures[rep];
          }
        }
        break;
      }
      case Method::Cqtf: {
        const Signal truth = true_quantile(spec.scenario, tau);
        const Signal y = generate(spec.scenario, rep);
        const RiskValue base = detail::metrics_of(y.values(), truth.values());
        report.baseline_mse[rep] = base.mse;
        report.baseline_delta_n_sq[rep] = base.delta_n_sq;
        const double budget = std::isnan(spec.fixed_budget)
                                  ? tv_r(truth, DiffOrder(r))
                                  : spec.fixed_budget;
        CqtfResult fit =
            cqtf_fit(CqtfProblem{y, tau, DiffOrder(r), budget}, spec.solver);
        ReplicateRow& row = report.rows[rep];
        row.replicate = rep;
        row.lambda = fit.lambda;
        row.lambda_eff = fit.lambda * detail::int_pow(static_cast<double>(y.size()), r - 1);
        row.log10_lambda_eff = std::log10(std::max(row.lambda_eff, 1e-300));
        const RiskValue m =
            detail::metrics_of(fit.solve.theta_hat.values(), truth.values());
        row.mse = m.mse;
        row.delta_n_sq = m.delta_n_sq;
        row.iterations = fit.solve.iterations;
        row.converged = fit.solve.converged && fit.bisection_converged;
        if (!row.converged) ++failures[rep];
        break;
      }
      case Method::Qtvd: {
        const detail::TruthAndData td = detail::lattice_replicate(spec, rep);
        const RiskValue base = detail::metrics_of(td.y, td.truth);
        report.baseline_mse[rep] = base.mse;
        report.baseline_delta_n_sq[rep] = base.delta_n_sq;
        const auto side = static_cast<std::size_t>(
            std::llround(std::sqrt(static_cast<double>(spec.scenario.n))));
        const double scale = detail::lattice_edge_scale(side, 2);
        const LinearOp a = LinearOp::lattice_incidence(side, 2, scale);
        const Signal y_flat{td.y};
        if (spec.tuning == TuningRule::Fixed) {
          SolveResult res = admm_solve(y_flat, tau, a, spec.fixed_lambda, spec.solver);
          ReplicateRow& row = report.rows[rep];
          row.replicate = rep;
          row.lambda = spec.fixed_lambda;
          row.lambda_eff = spec.fixed_lambda;
          row.log10_lambda_eff = std::log10(std::max(row.lambda_eff, 1e-300));
          const RiskValue m = detail::metrics_of(res.theta_hat.values(), td.truth);
          row.mse = m.mse;
          row.delta_n_sq = m.delta_n_sq;
          row.iterations = res.iterations;
          row.converged = res.converged;
        } else {
          AdmmPath path(y_flat, tau, a, spec.solver);
          for (std::size_t g = spec.grid.size(); g-- > 0;) {
            ReplicateRow& row = report.rows[rep * grid_size + g];
            row.replicate = rep;
            row.grid_index = g;
            row.log10_lambda_eff = spec.grid.log10_lambda_eff[g];
            row.lambda_eff = std::pow(10.0, row.log10_lambda_eff);
            row.lambda = row.lambda_eff;
            SolveResult res = path.solve(row.lambda_eff);
            const RiskValue m = detail::metrics_of(res.theta_hat.values(), td.truth);
            row.mse = m.mse;
            row.delta_n_sq = m.delta_n_sq;
            row.iterations = res.iterations;
            row.converged = res.converged;
            if (!res.converged) ++failures[rep];
          }
        }
        break;
      }
      case Method::L1qr: {
        const detail::RegressionSetup& setup = *regression;
        CounterRng rng = CounterRng::stream(spec.scenario.seed, rep);
        std::vector<double> y(setup.theta_star);
        for (double& v : y) {
          v += (spec.scenario.id == 1) ? rng.next_normal() : rng.next_cauchy();
        }
        const double q = (spec.scenario.id == 1) ? normal_quantile(spec.tau)
                                                 : cauchy_quantile(spec.tau);
        std::vector<double> truth(setup.theta_star);
        for (double& t : truth) t += q;
        const RiskValue base = detail::metrics_of(y, truth);
        report.baseline_mse[rep] = base.mse;
        report.baseline_delta_n_sq[rep] = base.delta_n_sq;
        double budget = spec.fixed_budget;
        if (std::isnan(budget)) {
          budget = 0.0;
          for (double b : setup.beta_star) budget += std::abs(b);
        }
        L1QrResult fit = l1_qr_fit(
            L1QrProblem{setup.X, Signal(y), tau, budget}, spec.solver);
        ReplicateRow& row = report.rows[rep];
        row.replicate = rep;
        const RiskValue m = detail::metrics_of(fit.result.theta_hat.values(), truth);
        row.mse = m.mse;
        row.delta_n_sq = m.delta_n_sq;
        row.iterations = fit.result.iterations;
        row.converged = fit.result.converged;
        if (!row.converged) ++failures[rep];
        break;
      }
    }
  });

  for (std::size_t f : failures) report.failed_points += f;

  // aggregation: ordered reduction over replicate index
  if (grid_size > 1) {
    report.grid_average.assign(grid_size, GridAggregate{});
    for (std::size_t g = 0; g < grid_size; ++g) {
      GridAggregate& agg = report.grid_average[g];
      agg.log10_lambda_eff = spec.grid.log10_lambda_eff[g];
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const ReplicateRow& row = report.rows[rep * grid_size + g];
        agg.avg_mse += row.mse;
        agg.avg_delta_n_sq += row.delta_n_sq;
      }
      agg.avg_mse /= static_cast<double>(reps);
      agg.avg_delta_n_sq /= static_cast<double>(reps);
    }
    // the tuned number is the best across-replicate average on the grid
    std::size_t best_mse = 0, best_delta = 0;
    for (std::size_t g = 1; g < grid_size; ++g) {
      if (report.grid_average[g].avg_mse < report.grid_average[best_mse].avg_mse) {
        best_mse = g;
      }
      if (report.grid_average[g].avg_delta_n_sq <
          report.grid_average[best_delta].avg_delta_n_sq) {
        best_delta = g;
      }
    }
    report.mse = detail::summarize_at(report.rows, grid_size, best_mse, false);
    report.delta = detail::summarize_at(report.rows, grid_size, best_delta, true);
    report.mse.log10_lambda_eff = spec.grid.log10_lambda_eff[best_mse];
    report.delta.log10_lambda_eff = spec.grid.log10_lambda_eff[best_delta];
  } else {
    report.mse = detail::summarize_at(report.rows, 1, 0, false);
    report.delta = detail::summarize_at(report.rows, 1, 0, true);
  }

  report.runtime_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

struct RatePoint {
  std::size_t n = 0;
  double avg_delta_n_sq = 0.0;
  double avg_mse = 0.0;
};

struct RateResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::vector<RatePoint> points;
  bool degenerate = false;
};

/// Least squares of log(risk) on log(n).
inline RateResult fit_log_log(const std::vector<std::size_t>& sizes,
                              const std::vector<double>& risks) {
  if (sizes.size() != risks.size() || sizes.size() < 2) {
    throw std::invalid_argument("rate fit: needs matching sizes/risks, >= 2 points");
  }
  const std::size_t k = sizes.size();
  RateResult out;
  out.points.resize(k);
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs(k), ys(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(risks[i] > 0.0)) throw std::invalid_argument("rate fit: risks must be > 0");
    xs[i] = std::log(static_cast<double>(sizes[i]));
    ys[i] = std::log(risks[i]);
    sx += xs[i];
    sy += ys[i];
    out.points[i].n = sizes[i];
    out.points[i].avg_delta_n_sq = risks[i];
  }
  const double mx = sx / static_cast<double>(k);
  const double my = sy / static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  double ymin = ys[0], ymax = ys[0];
  for (double v : ys) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }
  out.degenerate = (ymax - ymin) <= 1e-15 * (1.0 + std::abs(ymax));
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (k > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = ys[i] - (out.intercept + out.slope * xs[i]);
      rss += e * e;
    }
    out.slope_stderr = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  }
  return out;
}

/// Empirical convergence-rate study: run the base experiment at each size
/// and fit the log-log slope of the averaged Huber-type risk.
inline RateResult rate_slope(const ExperimentSpec& base,
                             const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 4) throw std::invalid_argument("rate_slope: needs >= 4 sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (!(sizes[i] < sizes[i + 1])) {
      throw std::invalid_argument("rate_slope: sizes must be increasing");
    }
  }
  std::vector<double> risks(sizes.size());
  std::vector<double> mses(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    ExperimentSpec spec = base;
    spec.scenario.n = sizes[i];
    const ExperimentReport rep = run_experiment(spec);
    risks[i] = rep.delta.average;
    mses[i] = rep.mse.average;
  }
  RateResult out = fit_log_log(sizes, risks);
  for (std::size_t i = 0; i < sizes.size(); ++i) out.points[i].avg_mse = mses[i];
  if (out.degenerate) {
    throw std::runtime_error("rate_slope: degenerate fit (all risks equal)");
  }
  return out;
}

}  // namespace qtf
