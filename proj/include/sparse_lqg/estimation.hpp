#pragma once

// Distributed estimation under the individual-observation information
// pattern: each agent i filters the joint state from y^i = C^i x + v^i and
// plays its block of −Γ x̂^i − α.
//
// The joint error e = [e^1; …; e^N] (e^i = x − x̂^i) evolves as
//   e⁻_{t+1} = (𝒜_t + ℬ_t) e_t + 𝟙⊗w_t,
//   e_{t+1}  = (I − 𝒦_{t+1}) e⁻_{t+1} − 𝕂_{t+1} v_{t+1}.
// Every agent's error sees the same process noise w_t, so its contribution
// to the joint prior covariance is 𝟙𝟙ᵀ ⊗ W_t.

#include "sparse_lqg/game.hpp"
#include "sparse_lqg/linalg.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace sparse_lqg {

struct AgentObservation {
  MatrixSeq C;  // p_i × n, T+1 entries
  MatrixSeq V;  // p_i × p_i, T+1 entries
  std::vector<Eigen::Index> groups;  // contiguous row-group sizes, sum p_i

  Eigen::Index obs_dim() const { return C.empty() ? 0 : C.front().rows(); }

  static AgentObservation constant(const Matrix& C, const Matrix& V,
                                   std::vector<Eigen::Index> groups,
                                   std::size_t horizon);
};

struct ObservationModel {
  std::vector<AgentObservation> agents;

  std::size_t num_agents() const { return agents.size(); }
  /// Throws InstanceError on dimension, partition or PSD violations.
  void validate(const GameSpec& spec) const;
};

/// 𝒜_t = blockdiag(A_t − B_tΓ_t, …) and ℬ_t with every block row equal to
/// [B_tE¹Γ_t … B_tE^NΓ_t].
struct CouplingMatrices {
  Matrix closed_loop;
  Matrix mixing;
};

CouplingMatrices build_coupling_matrices(const GameSpec& spec,
                                         const NashStrategy& strategy,
                                         std::size_t t);

/// Σ_1⁻ for the joint error: every agent starts from the shared prior mean,
/// so all N×N blocks equal the initial state covariance.
Matrix initial_joint_prior(const GameSpec& spec);

/// Σ⁻_{t+1} = (𝒜+ℬ) Σ_t (𝒜+ℬ)ᵀ + 𝟙𝟙ᵀ ⊗ W_t, symmetrized.
Matrix propagate_prior_covariance(const Matrix& posterior,
                                  const CouplingMatrices& coupling,
                                  const Matrix& process_noise,
                                  std::size_t num_agents);

/// Joint Joseph update Σ = (I − 𝒦)Σ⁻(I − 𝒦)ᵀ + 𝕂 V 𝕂ᵀ, symmetrized.
Matrix posterior_covariance_update(const Matrix& prior,
                                   std::span<const Matrix> gains,
                                   const ObservationModel& obs, std::size_t t);

/// (i,i) diagonal block of size `block` of a joint covariance.
Matrix extract_agent_block(const Matrix& joint, std::size_t agent,
                           Eigen::Index block);

/// Per-agent Joseph form (I − KC)Σ⁻(I − KC)ᵀ + KVKᵀ.
Matrix joseph_update(const Matrix& prior, const Matrix& gain, const Matrix& C,
                     const Matrix& V);

/// Innovation covariance C Σ⁻ Cᵀ + V.
Matrix innovation_covariance(const Matrix& prior, const Matrix& C,
                             const Matrix& V);

inline constexpr double kInnovationRcondFloor = 1e-12;

/// K* = Σ⁻Cᵀ(CΣ⁻Cᵀ + V)⁻¹, and K* = 0 when Σ⁻Cᵀ = 0. Otherwise throws
/// DegenerateInnovationError when the innovation covariance is numerically
/// singular.
Matrix optimal_gain(const Matrix& prior, const Matrix& C, const Matrix& V);

Vector predict_estimate(const Vector& estimate, const Vector& estimated_control,
                        const Matrix& A, const Matrix& B);

Vector correct_estimate(const Vector& prior_estimate, const Vector& observation,
                        const Matrix& gain, const Matrix& C);

/// û^i = −Γ x̂^i − α.
Vector estimated_joint_control(const Vector& estimate, const Matrix& gain,
                               const Vector& feedforward);

}  // namespace sparse_lqg
