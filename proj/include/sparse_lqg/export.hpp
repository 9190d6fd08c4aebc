#pragma once

// File export of strategies, schedules, traces and metrics. Floating point
// is written with 17 significant digits so every value reads back exactly.
//
// Layout of an output directory:
//   sensors.csv     t, agent, group, active, gain_frobenius
//   covariance.csv  t, agent, sigma_frobenius, sigma_trace
//   lambdas.csv     t, agent, group, lambda
//   costs.csv       run, agent, cost
//   run_XXXX/states.csv     t, x_0 .. x_{n-1}
//   run_XXXX/estimates.csv  t, agent, xhat_0 ..
//   run_XXXX/controls.csv   t, u_0 ..
//   metrics.json

#include "sparse_lqg/estimation.hpp"
#include "sparse_lqg/formation.hpp"
#include "sparse_lqg/game.hpp"
#include "sparse_lqg/group_lasso.hpp"
#include "sparse_lqg/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sparse_lqg {

std::string format_double(double value);

/// Row-major nested arrays.
nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);

void write_text(const std::filesystem::path& path, const std::string& text);

/// nash.json: Γ_t, α_t, the value constants at t = 0 and the FOC residual.
void export_strategy(const std::filesystem::path& dir, const GameSpec& spec,
                     const NashStrategy& strategy);

/// sensors.csv, covariance.csv, lambdas.csv.
void export_schedule(const std::filesystem::path& dir,
                     const GainSchedule& schedule, const ObservationModel& obs);

/// costs.csv and one run_XXXX directory per trace.
void export_traces(const std::filesystem::path& dir, const GameSpec& spec,
                   const std::vector<SimulationTrace>& traces);

/// conic.json: the second-order cone data of one per-agent solve.
void export_conic(const std::filesystem::path& dir, const ConicProgramData& data);

/// Scalar summary of an invocation; what metrics.json carries.
struct MetricsSummary {
  std::string policy;
  double r_th = 0.0;
  std::uint64_t seed = 0;
  std::size_t runs = 0;
  std::size_t steps = 0;
  std::vector<double> usage_fraction;                    // [agent]
  std::vector<std::vector<double>> group_usage_fraction;  // [agent][group]
  std::vector<double> peak_covariance_norm;              // [agent] ‖Σ_t^i‖_F
  std::vector<double> mean_cost;                         // [agent], over runs
  /// Formation scenario only.
  std::optional<double> leader_tracking_cost;

  bool operator==(const MetricsSummary&) const = default;
};

MetricsSummary summarize(const GainSchedule& schedule,
                         const std::vector<SimulationTrace>& traces,
                         const GameSpec& spec, const SimulationConfig& config,
                         const FormationParams* formation);

nlohmann::json summary_to_json(const MetricsSummary& summary);
MetricsSummary summary_from_json(const nlohmann::json& doc);

/// Recompute the summary from the exported CSVs of `dir`. `policy`, `r_th`
/// and `seed` are taken from metrics.json; every numeric field is rebuilt
/// from the CSV files.
MetricsSummary reimport_summary(const std::filesystem::path& dir,
                                const FormationParams* formation);

}  // namespace sparse_lqg
