#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qtf/experiment.hpp"
#include "qtf/io.hpp"

namespace qtf {

inline nlohmann::json experiment_config_json(const ExperimentSpec& spec) {
  nlohmann::json cfg;
  cfg["scenario"] = spec.scenario.id;
  cfg["n"] = spec.scenario.n;
  cfg["seed"] = spec.scenario.seed;
  cfg["tau"] = spec.tau;
  cfg["method"] = method_name(spec.method);
  cfg["r"] = spec.effective_order();
  cfg["tuning"] = tuning_name(spec.tuning);
  cfg["replicates"] = spec.replicates;
  cfg["grid"] = {{"count", spec.grid.size()},
                 {"log10_lambda_eff_min", spec.grid.log10_lambda_eff.front()},
                 {"log10_lambda_eff_max", spec.grid.log10_lambda_eff.back()}};
  if (!std::isnan(spec.fixed_lambda)) cfg["lambda"] = spec.fixed_lambda;
  if (!std::isnan(spec.fixed_budget)) cfg["budget"] = spec.fixed_budget;
  cfg["solver"] = {{"rho", spec.solver.rho},
                   {"eps_abs", spec.solver.eps_abs},
                   {"eps_rel", spec.solver.eps_rel},
                   {"max_iters", spec.solver.max_iters},
                   {"adaptive_rho", spec.solver.adaptive_rho}};
  return cfg;
}

inline nlohmann::json experiment_summary_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["config"] = experiment_config_json(report.spec);
  j["results"] = {
      {"avg_mse", report.mse.average},
      {"avg_mse_x10", report.mse.average_x10},
      {"se_mse", report.mse.std_error},
      {"mse_log10_lambda_eff", report.mse.log10_lambda_eff},
      {"avg_delta_n_sq", report.delta.average},
      {"avg_delta_n_sq_x10", report.delta.average_x10},
      {"se_delta_n_sq", report.delta.std_error},
      {"delta_log10_lambda_eff", report.delta.log10_lambda_eff},
  };
  double base_mse = 0.0, base_delta = 0.0;
  for (double v : report.baseline_mse) base_mse += v;
  for (double v : report.baseline_delta_n_sq) base_delta += v;
  const double reps = static_cast<double>(report.baseline_mse.size());
  j["baseline"] = {{"avg_mse", base_mse / reps},
                   {"avg_delta_n_sq", base_delta / reps},
                   {"per_replicate_mse", report.baseline_mse},
                   {"per_replicate_delta_n_sq", report.baseline_delta_n_sq}};
  j["replicates"] = report.baseline_mse.size();
  j["runtime_sec"] = report.runtime_sec;
  j["failed_points"] = report.failed_points;
  j["bic_formula"] = report.bic_formula;
  return j;
}

/// One CSV row per replicate per grid point; aggregates in the summary
/// are recomputable from these rows.
inline void write_experiment_csv(const std::string& path, const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report CSV '" + path + "'");
  out << "replicate,grid_index,log10_lambda_eff,lambda_eff,lambda,mse,delta_n_sq,"
         "iterations,converged\n";
  for (const ReplicateRow& row : report.rows) {
    out << row.replicate << ',' << row.grid_index << ','
        << format_double(row.log10_lambda_eff) << ',' << format_double(row.lambda_eff)
        << ',' << format_double(row.lambda) << ',' << format_double(row.mse) << ','
        << format_double(row.delta_n_sq) << ',' << row.iterations << ','
        << (row.converged ? 1 : 0) << "\n";
  }
}

inline void write_experiment_summary(const std::string& path,
                                     const ExperimentReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report JSON '" + path + "'");
  out << experiment_summary_json(report).dump(2) << "\n";
}

/// Base file name embedding scenario, method, size and seed.
inline std::string report_basename(const ExperimentSpec& spec) {
  return "s" + std::to_string(spec.scenario.id) + "_" + method_name(spec.method) +
         "_n" + std::to_string(spec.scenario.n) + "_seed" +
         std::to_string(spec.scenario.seed);
}

}  // namespace qtf
