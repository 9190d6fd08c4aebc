#pragma once

// LQG game play with sparse distributed estimation.
//
// The gain schedule (sparse gains, masks, covariances) does not depend on
// the noise realization and is computed once; rollouts then replay it under
// sampled noise. Gain steps are t = 0 .. T (the estimator corrects at every
// state step), control steps t = 0 .. T-1.
//
// Parallel kernels: compute_gain_schedule parallelizes the per-agent solves
// within a step, run and accumulate_error_covariance parallelize across
// Monte Carlo runs. Each has a *_serial reference producing bit-identical
// output.

#include "sparse_lqg/estimation.hpp"
#include "sparse_lqg/game.hpp"
#include "sparse_lqg/group_lasso.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace sparse_lqg {

/// Same λ on every group of every agent at every step.
struct ConstantLambda {
  double lambda = 0.0;
};

/// Fixed λ vector per agent (one entry per sensor group).
struct PerGroupLambda {
  std::vector<Vector> lambdas;
};

/// Control-adaptive λ from the feedback-gain block norms (interagent case).
struct AdaptiveLambda {
  double L1 = 1000.0;
  double L2 = 250.0;
};

using RegularizationPolicy =
    std::variant<ConstantLambda, PerGroupLambda, AdaptiveLambda>;

std::string describe(const RegularizationPolicy& policy);

struct SimulationConfig {
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  double r_th = 0.5;
  RegularizationPolicy policy = ConstantLambda{};
  SolverSettings solver;

  /// Throws InstanceError unless r_th ∈ (0,1] and runs ≥ 1.
  void validate() const;
};

struct AgentStep {
  Matrix gain;     // final (post-threshold) K_t^i
  Matrix optimal;  // K_t^{i*}
  Matrix pre_threshold;
  std::vector<bool> active;
  Vector lambdas;
  Matrix prior;      // Σ_t^{i-}
  Matrix posterior;  // Σ_t^i under the final gains of all agents
  double kkt = 0.0;
  std::size_t iterations = 0;
  /// |conic objective − group-lasso objective| at the solver output,
  /// relative to max(1, |objective|).
  double conic_gap = 0.0;
  /// Reset-guarantee diagnostics; only evaluated when C = I.
  bool interagent = false;
  double theorem_bound = 0.0;
  bool theorem_hypothesis = false;  // bound > 0 and max λ ≤ bound
  bool theorem_violated = false;    // hypothesis held but some group not reset
};

struct GainSchedule {
  std::vector<std::vector<AgentStep>> steps;  // [t][agent], T+1 entries
  MatrixSeq joint_prior;                      // Σ_t⁻, T+1 entries
  MatrixSeq joint_posterior;                  // Σ_t

  std::size_t num_steps() const { return steps.size(); }
};

/// Per-step λ for `agent` under `policy` (adaptive uses Γ_{t-1}, and Γ_0 at
/// t = 0).
Vector lambdas_for(const RegularizationPolicy& policy, const GameSpec& spec,
                   const ObservationModel& obs, const NashStrategy& strategy,
                   std::size_t t, std::size_t agent);

GainSchedule compute_gain_schedule(const GameSpec& spec,
                                   const ObservationModel& obs,
                                   const NashStrategy& strategy,
                                   const SimulationConfig& config);

GainSchedule compute_gain_schedule_serial(const GameSpec& spec,
                                          const ObservationModel& obs,
                                          const NashStrategy& strategy,
                                          const SimulationConfig& config);

struct SimulationTrace {
  std::size_t run = 0;
  VectorSeq state;                            // x_t, T+1
  std::vector<VectorSeq> estimate;            // [agent][t] x̂_t^i, T+1
  std::vector<VectorSeq> prior_estimate;      // [agent][t] x̂_t^{i-}, T+1
  VectorSeq control;                          // u_t, T
  std::vector<VectorSeq> estimated_control;   // [agent][t] û_t^i, T
  std::vector<VectorSeq> observation;         // [agent][t] y_t^i, T+1
  std::vector<std::vector<std::vector<bool>>> sensor_active;  // [t][agent]
  std::vector<std::vector<double>> error_norm;  // [agent][t] ‖e_t^i‖
  std::vector<std::vector<double>> stage_cost;  // [agent][t], T+1 (last terminal)

  /// Joint error [e^1; …; e^N] at step t.
  Vector joint_error(std::size_t t) const;
};

/// One rollout; run `run_index` uses noise keyed by (config.seed, run_index).
SimulationTrace simulate_run(const GameSpec& spec, const ObservationModel& obs,
                             const NashStrategy& strategy,
                             const GainSchedule& schedule,
                             const SimulationConfig& config,
                             std::size_t run_index);

std::vector<SimulationTrace> run(const GameSpec& spec,
                                 const ObservationModel& obs,
                                 const NashStrategy& strategy,
                                 const GainSchedule& schedule,
                                 const SimulationConfig& config);

std::vector<SimulationTrace> run_serial(const GameSpec& spec,
                                        const ObservationModel& obs,
                                        const NashStrategy& strategy,
                                        const GainSchedule& schedule,
                                        const SimulationConfig& config);

/// Empirical covariance of the joint posterior error e_t over
/// config.runs rollouts, per t (T+1 entries). Runs are reduced in fixed
/// chunks so the parallel and serial results agree bit for bit.
MatrixSeq accumulate_error_covariance(const GameSpec& spec,
                                      const ObservationModel& obs,
                                      const NashStrategy& strategy,
                                      const GainSchedule& schedule,
                                      const SimulationConfig& config);

MatrixSeq accumulate_error_covariance_serial(const GameSpec& spec,
                                             const ObservationModel& obs,
                                             const NashStrategy& strategy,
                                             const GainSchedule& schedule,
                                             const SimulationConfig& config);

/// ½(xᵀQx + 2qᵀx + uᵀRu + 2rᵀu) + c at a control step; pass an empty u for
/// the terminal step.
double stage_cost(const GameSpec& spec, std::size_t agent, std::size_t t,
                  const Vector& x, const Vector& u);

/// Sum of stage and terminal costs of each agent along the trace.
std::vector<double> realized_cost(const SimulationTrace& trace,
                                  const GameSpec& spec);

}  // namespace sparse_lqg
