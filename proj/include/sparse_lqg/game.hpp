#pragma once

// N-player finite-horizon LQ game and its feedback Nash strategy.
//
// Time indexing is 0-based throughout the library. With horizon T:
//   controls, dynamics and control costs exist for t = 0 .. T-1,
//   states and state costs exist for t = 0 .. T (t = T is terminal).
//
// Agent i minimizes
//   sum_t ½ (xᵀ Q_t^i x + 2 q_t^iᵀ x + uᵀ R_t^i u + 2 r_t^iᵀ u) + c_t^i
//   + ½ (xᵀ Q_T^i x + 2 q_T^iᵀ x) + c_T^i
// over its own control block, where x and u are the joint state and control.

#include "sparse_lqg/linalg.hpp"

#include <cstddef>
#include <vector>

namespace sparse_lqg {

struct AgentDynamics {
  Eigen::Index state_dim = 0;
  Eigen::Index control_dim = 0;
  MatrixSeq A;  // state_dim × state_dim, one per step
  MatrixSeq B;  // state_dim × control_dim
  MatrixSeq W;  // process-noise covariance

  /// Time-invariant agent repeated over `horizon` steps.
  static AgentDynamics constant(const Matrix& A, const Matrix& B,
                                const Matrix& W, std::size_t horizon);
};

struct JointDynamics {
  MatrixSeq A;
  MatrixSeq B;
  MatrixSeq W;
};

/// Quadratic cost of one agent over the joint state and control.
struct AgentCost {
  MatrixSeq Q;  // n × n, T+1 entries
  VectorSeq q;  // n, T+1 entries
  MatrixSeq R;  // m × m, T entries
  VectorSeq r;  // m, T entries
  std::vector<double> constant;  // T+1 entries, may be empty (all zero)
};

struct GameSpec {
  std::vector<AgentDynamics> agents;
  std::size_t horizon = 0;
  JointDynamics joint;
  std::vector<AgentCost> costs;
  Vector initial_mean;
  Matrix initial_covariance;

  std::size_t num_agents() const { return agents.size(); }
  Eigen::Index state_dim() const;
  Eigen::Index control_dim() const;
  Eigen::Index state_offset(std::size_t agent) const;
  Eigen::Index control_offset(std::size_t agent) const;
  double cost_constant(std::size_t agent, std::size_t t) const;

  /// Throws InstanceError on any dimension or symmetry violation.
  void validate() const;
};

/// Block-diagonal joint A_t, B_t, W_t with agent blocks in index order.
JointDynamics build_joint_dynamics(const std::vector<AgentDynamics>& agents,
                                   std::size_t horizon);

/// Assemble and validate a GameSpec.
GameSpec make_game(std::vector<AgentDynamics> agents, std::size_t horizon,
                   std::vector<AgentCost> costs, Vector initial_mean,
                   Matrix initial_covariance);

struct NashStrategy {
  MatrixSeq gain;         // Γ_t, m × n, T entries
  VectorSeq feedforward;  // α_t, m, T entries
  // Value-function certificates: V_t^i(x) = ½xᵀZx + ζᵀx + value_constant,
  // indexed [agent][t] with T+1 entries.
  std::vector<MatrixSeq> value_matrix;
  std::vector<VectorSeq> value_vector;
  std::vector<std::vector<double>> value_constant;

  std::size_t horizon() const { return gain.size(); }
};

/// Reciprocal-condition floor of the stacked stagewise system.
inline constexpr double kNashRcondFloor = 1e-12;

/// Stagewise coupled solve of the finite-horizon feedback Nash equilibrium.
/// Throws NashSolveError when the stacked matrix at some step is singular.
NashStrategy solve_feedback_nash(const GameSpec& spec);

/// Max over t of ‖S_t [Γ_t α_t] − Y_t‖_F / ‖Y_t‖_F, with S_t, Y_t rebuilt
/// from the value functions that the given strategy itself induces. When
/// ‖Y_t‖_F vanishes the unnormalized residual is used.
double foc_residual(const GameSpec& spec, const NashStrategy& strategy);

/// Rows of Γ_t belonging to `agent` (m_i × n).
Matrix agent_gain_rows(const GameSpec& spec, const Matrix& gain,
                       std::size_t agent);

}  // namespace sparse_lqg
