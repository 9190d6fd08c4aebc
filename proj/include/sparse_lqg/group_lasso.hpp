#pragma once

// Per-agent sparse estimation gain:
//
//   minimize_K  ‖K M − S‖_F² + Σ_ρ λ_ρ ‖K[ρ]‖_F
//
// with M = C Σ⁻ Cᵀ + V, S = Σ⁻ Cᵀ and K[ρ] the ρ-th block column of K
// (one block per sensor group). The unpenalized minimizer is K* = S M⁻¹.

#include "sparse_lqg/linalg.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace sparse_lqg {

struct GroupLassoProblem {
  Matrix M;  // p × p, symmetric PSD
  Matrix S;  // n × p
  Vector lambdas;  // one per group, nonnegative
  std::vector<Eigen::Index> groups;  // block-column sizes, sum p

  Eigen::Index rows() const { return S.rows(); }
  Eigen::Index cols() const { return S.cols(); }
  std::size_t num_groups() const { return groups.size(); }
  /// Column offset of each group, plus the total as the last entry.
  std::vector<Eigen::Index> group_offsets() const;
};

/// Throws InstanceError on negative λ or inconsistent dimensions.
GroupLassoProblem assemble_problem(const Matrix& prior, const Matrix& C,
                                   const Matrix& V, const Vector& lambdas,
                                   std::vector<Eigen::Index> groups);

struct SolverSettings {
  std::size_t max_iterations = 20000;
  /// Stop when ‖K_{k+1} − K_k‖_F ≤ tol · max(1, ‖K_k‖_F) ...
  double relative_change_tol = 1e-10;
  /// ... or when the KKT residual drops below this.
  double stop_kkt = 1e-8;
  /// Acceptance threshold on the returned point's KKT residual.
  double kkt_tolerance = 1e-6;
  /// Newton refinement on the detected active set.
  bool polish = true;
};

struct GroupLassoSolution {
  Matrix K;
  double kkt = 0.0;
  std::size_t iterations = 0;
};

/// Accelerated proximal gradient with objective-based momentum restart and
/// step 1/L, L = 2σ_max(M)², followed by Newton polishing on the active
/// groups. Throws ConvergenceError if the cap is reached above tolerance.
GroupLassoSolution solve_group_lasso(const GroupLassoProblem& problem,
                                     const SolverSettings& settings = {});

double objective(const GroupLassoProblem& problem, const Matrix& K);

/// Smooth-part gradient 2(KM − S)M.
Matrix smooth_gradient(const GroupLassoProblem& problem, const Matrix& K);

/// Proximal operator of amount·‖·‖_F.
Matrix group_soft_threshold(const Matrix& block, double amount);

struct KktReport {
  std::vector<double> per_group;
  double max = 0.0;
};

KktReport kkt_residual(const GroupLassoProblem& problem, const Matrix& K);

/// ‖2 S M E_ρ‖_F per group: K = 0 is optimal iff each is ≤ λ_ρ.
std::vector<double> zero_thresholds(const GroupLassoProblem& problem);

/// Second-order cone form over x = [vec(K); s]:
///   minimize ‖(M ⊗ I_n) vec(K) − vec(S)‖² + Σ λ_ρ s_ρ
///   s.t.     ‖vec(K[ρ])‖₂ ≤ s_ρ.
/// vec is column-major, so each group's entries are contiguous.
struct SecondOrderCone {
  Eigen::Index begin = 0;  // first index of vec(K[ρ])
  Eigen::Index size = 0;
  Eigen::Index slack = 0;  // index of s_ρ in x
};

struct ConicProgramData {
  Matrix quadratic;  // (n·p) × (n·p)
  Vector target;     // vec(S)
  Vector slack_weights;
  std::vector<SecondOrderCone> cones;
  Eigen::Index rows = 0;  // n, for reshaping vec(K)
  Eigen::Index cols = 0;  // p

  Eigen::Index num_variables() const {
    return quadratic.cols() + static_cast<Eigen::Index>(cones.size());
  }
  double objective(const Vector& x) const;
  /// Largest cone violation max_ρ (‖x_ρ‖ − s_ρ), clipped at 0.
  double cone_violation(const Vector& x) const;
  /// Feasible point [vec(K); ‖vec(K[ρ])‖] for a gain K.
  Vector lift(const Matrix& K) const;
};

ConicProgramData vectorize_to_cone(const GroupLassoProblem& problem);

struct GainDecision {
  Matrix final_gain;
  std::vector<bool> active;
  Matrix pre_threshold;
  Matrix reference;

  std::size_t active_count() const;
};

/// Relative slack on the reset comparison; a solver output that matches K*
/// to roundoff counts as a tie, and ties reset.
inline constexpr double kResetTieTol = 1e-9;

/// Group ρ becomes K*[ρ] when ‖K[ρ]‖_F ≥ r_th ‖K*[ρ]‖_F, else zero. A group
/// with ‖K*[ρ]‖_F = 0 is active with a zero block.
GainDecision apply_reset_rule(const Matrix& pre_threshold,
                              const Matrix& reference, double r_th,
                              std::span<const Eigen::Index> groups);

/// Blocks with ‖Γ^i[j]‖_F at or below this (relative to max(1, ‖Γ^i‖_F))
/// count as zero in adaptive_lambda.
inline constexpr double kZeroGainBlockTol = 1e-10;

/// λ^{ij} = L1/‖Γ^i[j]‖_F for nonzero blocks, L2 otherwise. `agent_gain` is
/// agent i's rows of Γ (m_i × n); `state_sizes` the per-agent state dims.
Vector adaptive_lambda(const Matrix& agent_gain, double L1, double L2,
                       std::span<const Eigen::Index> state_sizes);

/// Sufficient level on max_ρ λ_ρ under which every group resets to K*
/// (interagent case C = I). Zero when σ_min(Σ⁻) = 0 or r_th = 1.
double theorem1_bound(const Matrix& prior, const Matrix& V, double r_th,
                      std::size_t num_groups);

}  // namespace sparse_lqg
