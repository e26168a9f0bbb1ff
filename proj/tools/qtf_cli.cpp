// Command-line front end: fitting, lattice denoising, Monte Carlo
// simulation, convergence-rate studies, and the exact LP reference solver.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtf/experiment.hpp"
#include "qtf/io.hpp"
#include "qtf/lattice.hpp"
#include "qtf/lp.hpp"
#include "qtf/qtf.hpp"
#include "qtf/quantile_lasso.hpp"
#include "qtf/report_io.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;

struct SolverFlags {
  double rho = 1.0;
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  std::size_t max_iters = 20000;
  bool no_adaptive_rho = false;

  qtf::SolverConfig config() const {
    qtf::SolverConfig cfg;
    cfg.rho = rho;
    cfg.eps_abs = eps_abs;
    cfg.eps_rel = eps_rel;
    cfg.max_iters = max_iters;
    cfg.adaptive_rho = !no_adaptive_rho;
    return cfg;
  }

  json echo() const {
    return json{{"rho", rho},
                {"eps_abs", eps_abs},
                {"eps_rel", eps_rel},
                {"max_iters", max_iters},
                {"adaptive_rho", !no_adaptive_rho}};
  }
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
  cmd->add_option("--rho", flags.rho, "ADMM penalty parameter");
  cmd->add_option("--eps-abs", flags.eps_abs, "absolute stopping tolerance");
  cmd->add_option("--eps-rel", flags.eps_rel, "relative stopping tolerance");
  cmd->add_option("--max-iters", flags.max_iters, "iteration cap");
  cmd->add_flag("--no-adaptive-rho", flags.no_adaptive_rho, "disable residual balancing");
}

std::size_t resolve_thread_flag(std::size_t flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("QTF_THREADS")) {
    const long v = std::atol(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 0;  // library default: hardware concurrency
}

// Apply a JSON config file as defaults; explicitly passed flags win
// because they are parsed afterwards.
void apply_config_defaults(int argc, char** argv, json& out) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw std::runtime_error(std::string("cannot open config '") + argv[i + 1] + "'");
      in >> out;
      return;
    }
  }
}

json solve_result_json(const qtf::SolveResult& res) {
  return json{{"objective", res.objective},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"primal_residual", res.primal_residual},
              {"dual_residual", res.dual_residual}};
}

void write_json(const std::string& path, const json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

int cmd_fit(const std::string& input, double tau, std::size_t order,
            std::optional<double> lambda, std::optional<double> budget,
            const SolverFlags& flags, const std::string& out_path,
            const std::string& theta_out) {
  if (lambda.has_value() == budget.has_value()) {
    throw CLI::ValidationError("fit", "pass exactly one of --lambda / --budget");
  }
  const qtf::Signal y = qtf::read_signal(input);
  const qtf::QuantileLevel level(tau);
  const qtf::DiffOrder r(order);
  const qtf::SolverConfig cfg = flags.config();

  json out;
  out["config"] = {{"input", input}, {"tau", tau},       {"order", order},
                   {"solver", flags.echo()},
                   {"mode", lambda ? "penalized" : "constrained"}};
  bool converged = true;
  std::vector<double> theta;
  if (lambda) {
    out["config"]["lambda"] = *lambda;
    const qtf::PqtfResult fit = qtf::pqtf_fit(qtf::PqtfProblem{y, level, r, *lambda}, cfg);
    out["result"] = solve_result_json(fit.solve);
    out["result"]["tv"] = fit.tv;
    out["result"]["knots"] = fit.knots;
    out["result"]["df"] = fit.df;
    out["result"]["lambda_eff"] = fit.lambda_eff;
    converged = fit.solve.converged;
    theta = fit.solve.theta_hat.values();
  } else {
    out["config"]["budget"] = *budget;
    const qtf::CqtfResult fit = qtf::cqtf_fit(qtf::CqtfProblem{y, level, r, *budget}, cfg);
    out["result"] = solve_result_json(fit.solve);
    out["result"]["tv"] = fit.tv;
    out["result"]["lambda_at_budget"] = fit.lambda;
    out["result"]["bisections"] = fit.bisections;
    out["result"]["bisection_converged"] = fit.bisection_converged;
    converged = fit.solve.converged && fit.bisection_converged;
    theta = fit.solve.theta_hat.values();
  }
  out["theta"] = theta;
  write_json(out_path, out);
  if (!theta_out.empty()) qtf::write_signal(theta_out, qtf::Signal(theta));
  return converged ? kExitOk : kExitNotConverged;
}

int cmd_denoise2d(const std::string& input, double tau, std::optional<double> lambda,
                  std::optional<double> budget, const SolverFlags& flags,
                  const std::string& out_path, const std::string& result_out) {
  if (lambda.has_value() == budget.has_value()) {
    throw CLI::ValidationError("denoise2d", "pass exactly one of --lambda / --budget");
  }
  const qtf::LatticeSignal grid = qtf::read_lattice(input);
  qtf::QtvdProblem problem{grid, qtf::QuantileLevel(tau), budget, lambda};
  const qtf::QtvdResult fit = qtf::qtvd_fit(problem, flags.config());
  qtf::write_lattice(out_path, fit.theta_hat);
  if (!result_out.empty()) {
    json out;
    out["config"] = {{"input", input},
                     {"tau", tau},
                     {"solver", flags.echo()},
                     {"mode", lambda ? "penalized" : "constrained"}};
    if (lambda) out["config"]["lambda"] = *lambda;
    if (budget) out["config"]["budget"] = *budget;
    out["result"] = solve_result_json(fit.solve);
    out["result"]["tv"] = fit.tv;
    out["result"]["lambda_at_budget"] = fit.lambda;
    write_json(result_out, out);
  }
  return (fit.solve.converged && fit.bisection_converged) ? kExitOk : kExitNotConverged;
}

qtf::Method parse_method(const std::string& name) {
  if (name == "pqtf1") return qtf::Method::Pqtf1;
  if (name == "pqtf2") return qtf::Method::Pqtf2;
  if (name == "cqtf") return qtf::Method::Cqtf;
  if (name == "qtvd") return qtf::Method::Qtvd;
  if (name == "l1qr") return qtf::Method::L1qr;
  throw CLI::ValidationError("method", "unknown method '" + name + "'");
}

qtf::TuningRule parse_tuning(const std::string& name) {
  if (name == "oracle-grid") return qtf::TuningRule::OracleGrid;
  if (name == "bic") return qtf::TuningRule::Bic;
  if (name == "fixed") return qtf::TuningRule::Fixed;
  throw CLI::ValidationError("tuning", "unknown tuning rule '" + name + "'");
}

qtf::TuningGrid parse_grid(const std::vector<double>& spec) {
  if (spec.empty()) return qtf::TuningGrid::standard();
  if (spec.size() != 3) {
    throw CLI::ValidationError("grid", "--grid expects LO,HI,COUNT");
  }
  return qtf::TuningGrid::linspace(spec[0], spec[1], static_cast<std::size_t>(spec[2]));
}

int cmd_simulate(int scenario, std::size_t n, double tau, const std::string& method,
                 const std::string& tuning, std::size_t order, std::size_t replicates,
                 std::uint64_t seed, const std::string& out_dir,
                 const std::vector<double>& grid_spec, std::optional<double> lambda,
                 std::optional<double> budget, const SolverFlags& flags,
                 std::size_t threads) {
  qtf::ExperimentSpec spec;
  spec.scenario = qtf::ScenarioSpec{scenario, n, seed};
  spec.tau = tau;
  spec.method = parse_method(method);
  spec.tuning = parse_tuning(tuning);
  spec.order = order;
  spec.grid = parse_grid(grid_spec);
  spec.replicates = replicates;
  if (lambda) spec.fixed_lambda = *lambda;
  if (budget) spec.fixed_budget = *budget;
  spec.solver = flags.config();
  spec.threads = resolve_thread_flag(threads);

  std::fprintf(stderr, "simulate: scenario %d, n=%zu, %s/%s, %zu replicates\n", scenario,
               n, method.c_str(), tuning.c_str(), replicates);
  const qtf::ExperimentReport report = qtf::run_experiment(spec);
  std::filesystem::create_directories(out_dir);
  const std::string base = (std::filesystem::path(out_dir) /
                            qtf::report_basename(spec)).string();
  qtf::write_experiment_csv(base + ".csv", report);
  qtf::write_experiment_summary(base + ".json", report);
  std::fprintf(stderr, "simulate: done in %.1fs, avg mse x10 = %.4g (reports at %s.*)\n",
               report.runtime_sec, report.mse.average_x10, base.c_str());
  return kExitOk;
}

int cmd_rate(std::size_t order, const std::string& truth,
             const std::vector<std::size_t>& sizes, std::size_t replicates,
             std::uint64_t seed, const std::vector<double>& grid_spec,
             const SolverFlags& flags, std::size_t threads, const std::string& out_path) {
  json out;
  out["config"] = {{"order", order},  {"truth", truth},       {"sizes", sizes},
                   {"replicates", replicates}, {"seed", seed}, {"solver", flags.echo()}};
  qtf::RateResult result;
  if (truth == "self-test") {
    std::vector<double> risks(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      risks[i] = std::pow(static_cast<double>(sizes[i]), -2.0 / 3.0);
    }
    result = qtf::fit_log_log(sizes, risks);
  } else {
    qtf::ExperimentSpec base;
    base.tau = 0.5;
    base.replicates = replicates;
    base.solver = flags.config();
    base.threads = resolve_thread_flag(threads);
    base.grid = parse_grid(grid_spec);
    if (truth == "bv-sin") {
      base.scenario = qtf::ScenarioSpec{5, sizes.front(), seed};
      base.method = (order == 2) ? qtf::Method::Pqtf2 : qtf::Method::Pqtf1;
      base.tuning = qtf::TuningRule::OracleGrid;
    } else if (truth == "pc-cqtf") {
      base.scenario = qtf::ScenarioSpec{1, sizes.front(), seed};
      base.method = qtf::Method::Cqtf;
      base.order = order;
      base.tuning = qtf::TuningRule::Fixed;  // budget defaults to the truth's TV
    } else {
      throw CLI::ValidationError("truth", "expected self-test, bv-sin or pc-cqtf");
    }
    result = qtf::rate_slope(base, sizes);
  }
  out["slope"] = result.slope;
  out["intercept"] = result.intercept;
  out["slope_stderr"] = result.slope_stderr;
  json points = json::array();
  for (const qtf::RatePoint& pt : result.points) {
    points.push_back({{"n", pt.n},
                      {"avg_delta_n_sq", pt.avg_delta_n_sq},
                      {"avg_mse", pt.avg_mse}});
  }
  out["points"] = points;
  write_json(out_path, out);
  return kExitOk;
}

int cmd_oracle(const std::string& kind, const std::string& y_path, double tau,
               std::size_t order, std::optional<double> lambda,
               std::optional<double> budget, const std::string& design_path,
               const std::string& lattice_path) {
  qtf::QuantileLevel level(tau);
  qtf::LpSolution sol;
  if (kind == "pqtf") {
    if (!lambda) throw CLI::ValidationError("oracle", "pqtf needs --lambda");
    const qtf::Signal y = qtf::read_signal(y_path);
    sol = qtf::simplex_solve(
        qtf::encode_pqtf_lp(qtf::PqtfProblem{y, level, qtf::DiffOrder(order), *lambda}).lp);
  } else if (kind == "cqtf") {
    if (!budget) throw CLI::ValidationError("oracle", "cqtf needs --budget");
    const qtf::Signal y = qtf::read_signal(y_path);
    sol = qtf::simplex_solve(
        qtf::encode_cqtf_lp(qtf::CqtfProblem{y, level, qtf::DiffOrder(order), *budget}).lp);
  } else if (kind == "qtvd") {
    const qtf::LatticeSignal grid = qtf::read_lattice(lattice_path);
    sol = qtf::simplex_solve(
        qtf::encode_qtvd_lp(qtf::QtvdProblem{grid, level, budget, lambda}).lp);
  } else if (kind == "l1qr") {
    if (!budget) throw CLI::ValidationError("oracle", "l1qr needs --budget");
    const qtf::Signal y = qtf::read_signal(y_path);
    const qtf::DesignMatrix X = qtf::read_design(design_path);
    sol = qtf::simplex_solve(qtf::encode_l1qr_lp(qtf::L1QrProblem{X, y, level, *budget}).lp);
  } else {
    throw CLI::ValidationError("oracle", "expected pqtf, cqtf, qtvd or l1qr");
  }
  std::printf("%s\n", qtf::format_double(sol.optimum).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantile trend filtering toolkit"};
  app.require_subcommand(1);

  json config;
  try {
    apply_config_defaults(argc, argv, config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  const auto cfg_or = [&config](const char* key, auto fallback) {
    using T = decltype(fallback);
    if (config.contains(key)) return config[key].get<T>();
    return fallback;
  };

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  // fit
  auto* fit = app.add_subcommand("fit", "penalized or budgeted trend filtering fit");
  std::string fit_input, fit_out = "-", fit_theta_out;
  double fit_tau = cfg_or("tau", 0.5);
  std::size_t fit_order = cfg_or("order", static_cast<std::size_t>(1));
  std::optional<double> fit_lambda, fit_budget;
  if (config.contains("lambda")) fit_lambda = config["lambda"].get<double>();
  if (config.contains("budget")) fit_budget = config["budget"].get<double>();
  SolverFlags fit_flags;
  fit->add_option("input", fit_input, "signal file")->required();
  fit->add_option("--tau", fit_tau, "quantile level in (0,1)");
  fit->add_option("--order", fit_order, "difference order r >= 1");
  fit->add_option("--lambda", [&fit_lambda](const std::vector<std::string>& v) {
    fit_lambda = std::stod(v[0]);
    return true;
  }, "penalty on the r-th order total variation");
  fit->add_option("--budget", [&fit_budget](const std::vector<std::string>& v) {
    fit_budget = std::stod(v[0]);
    return true;
  }, "total variation budget");
  fit->add_option("--out", fit_out, "result JSON path ('-' for stdout)");
  fit->add_option("--theta-out", fit_theta_out, "optional plain-text fit output");
  add_solver_flags(fit, fit_flags);

  // denoise2d
  auto* den = app.add_subcommand("denoise2d", "lattice quantile TV denoising");
  std::string den_input, den_out = "denoised.csv", den_result;
  double den_tau = cfg_or("tau", 0.5);
  std::optional<double> den_lambda, den_budget;
  SolverFlags den_flags;
  den->add_option("input", den_input, "grid CSV")->required();
  den->add_option("--tau", den_tau, "quantile level in (0,1)");
  den->add_option("--lambda", [&den_lambda](const std::vector<std::string>& v) {
    den_lambda = std::stod(v[0]);
    return true;
  }, "penalty on the lattice TV");
  den->add_option("--budget", [&den_budget](const std::vector<std::string>& v) {
    den_budget = std::stod(v[0]);
    return true;
  }, "lattice TV budget");
  den->add_option("--out", den_out, "denoised grid CSV path");
  den->add_option("--result-out", den_result, "optional result JSON path");
  add_solver_flags(den, den_flags);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo benchmark run");
  int sim_scenario = cfg_or("scenario", 1);
  std::size_t sim_n = cfg_or("n", static_cast<std::size_t>(1000));
  double sim_tau = cfg_or("tau", 0.5);
  std::string sim_method = cfg_or("method", std::string("pqtf1"));
  std::string sim_tuning = cfg_or("tuning", std::string("oracle-grid"));
  std::size_t sim_order = cfg_or("r", static_cast<std::size_t>(1));
  std::size_t sim_reps = cfg_or("replicates", static_cast<std::size_t>(100));
  std::uint64_t sim_seed = cfg_or("seed", static_cast<std::uint64_t>(0));
  std::string sim_out = "reports";
  std::vector<double> sim_grid;
  if (config.contains("grid")) sim_grid = config["grid"].get<std::vector<double>>();
  std::optional<double> sim_lambda, sim_budget;
  std::size_t sim_threads = 0;
  SolverFlags sim_flags;
  sim->add_option("--scenario", sim_scenario, "scenario id 1..6");
  sim->add_option("--n", sim_n, "sample size");
  sim->add_option("--tau", sim_tau, "quantile level");
  sim->add_option("--method", sim_method, "pqtf1|pqtf2|cqtf|qtvd|l1qr");
  sim->add_option("--tuning", sim_tuning, "oracle-grid|bic|fixed");
  sim->add_option("--order", sim_order, "difference order for cqtf");
  sim->add_option("--replicates", sim_reps, "Monte Carlo replicates");
  sim->add_option("--seed", sim_seed, "base seed (replicates derive streams)");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--grid", sim_grid, "grid LO,HI,COUNT over log10 effective penalty")
      ->delimiter(',');
  sim->add_option("--lambda", [&sim_lambda](const std::vector<std::string>& v) {
    sim_lambda = std::stod(v[0]);
    return true;
  }, "fixed penalty (tuning=fixed)");
  sim->add_option("--budget", [&sim_budget](const std::vector<std::string>& v) {
    sim_budget = std::stod(v[0]);
    return true;
  }, "fixed budget (cqtf/l1qr; defaults to the truth's value)");
  sim->add_option("--threads", sim_threads, "worker threads (QTF_THREADS as fallback)");
  add_solver_flags(sim, sim_flags);

  // rate
  auto* rate = app.add_subcommand("rate", "empirical convergence-rate slopes");
  std::size_t rate_order = cfg_or("order", static_cast<std::size_t>(1));
  std::string rate_truth = "bv-sin";
  std::vector<std::size_t> rate_sizes{256, 512, 1024, 2048, 4096};
  std::size_t rate_reps = cfg_or("replicates", static_cast<std::size_t>(30));
  std::uint64_t rate_seed = cfg_or("seed", static_cast<std::uint64_t>(0));
  std::vector<double> rate_grid;
  std::size_t rate_threads = 0;
  std::string rate_out = "-";
  SolverFlags rate_flags;
  rate->add_option("--order", rate_order, "difference order");
  rate->add_option("--truth", rate_truth, "self-test|bv-sin|pc-cqtf");
  rate->add_option("--sizes", rate_sizes, "increasing sample sizes")->delimiter(',');
  rate->add_option("--replicates", rate_reps, "replicates per size");
  rate->add_option("--seed", rate_seed, "base seed");
  rate->add_option("--grid", rate_grid, "grid LO,HI,COUNT")->delimiter(',');
  rate->add_option("--threads", rate_threads, "worker threads");
  rate->add_option("--out", rate_out, "slope report JSON ('-' for stdout)");
  add_solver_flags(rate, rate_flags);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact LP reference optimum");
  std::string oracle_kind = "pqtf", oracle_y, oracle_design, oracle_lattice;
  double oracle_tau = cfg_or("tau", 0.5);
  std::size_t oracle_order = cfg_or("order", static_cast<std::size_t>(1));
  std::optional<double> oracle_lambda, oracle_budget;
  oracle->add_option("--kind", oracle_kind, "pqtf|cqtf|qtvd|l1qr");
  oracle->add_option("--y", oracle_y, "signal file");
  oracle->add_option("--tau", oracle_tau, "quantile level");
  oracle->add_option("--order", oracle_order, "difference order");
  oracle->add_option("--lambda", [&oracle_lambda](const std::vector<std::string>& v) {
    oracle_lambda = std::stod(v[0]);
    return true;
  }, "penalty");
  oracle->add_option("--budget", [&oracle_budget](const std::vector<std::string>& v) {
    oracle_budget = std::stod(v[0]);
    return true;
  }, "budget");
  oracle->add_option("--design", oracle_design, "design matrix CSV (l1qr)");
  oracle->add_option("--lattice", oracle_lattice, "lattice CSV (qtvd)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      return cmd_fit(fit_input, fit_tau, fit_order, fit_lambda, fit_budget, fit_flags,
                     fit_out, fit_theta_out);
    }
    if (*den) {
      return cmd_denoise2d(den_input, den_tau, den_lambda, den_budget, den_flags,
                           den_out, den_result);
    }
    if (*sim) {
      return cmd_simulate(sim_scenario, sim_n, sim_tau, sim_method, sim_tuning,
                          sim_order, sim_reps, sim_seed, sim_out, sim_grid, sim_lambda,
                          sim_budget, sim_flags, sim_threads);
    }
    if (*rate) {
      return cmd_rate(rate_order, rate_truth, rate_sizes, rate_reps, rate_seed,
                      rate_grid, rate_flags, rate_threads, rate_out);
    }
    if (*oracle) {
      return cmd_oracle(oracle_kind, oracle_y, oracle_tau, oracle_order, oracle_lambda,
                        oracle_budget, oracle_design, oracle_lattice);
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
