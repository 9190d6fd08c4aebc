#pragma once

// Random problem generators shared by the check command, tests and
// benchmarks, and the reset-guarantee suite.

#include "sparse_lqg/estimation.hpp"
#include "sparse_lqg/game.hpp"
#include "sparse_lqg/group_lasso.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace sparse_lqg {

using Rng = std::mt19937_64;

Matrix random_gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols);

/// Symmetric with eigenvalues drawn uniformly from [lo, hi].
Matrix random_spd(Rng& rng, Eigen::Index n, double lo, double hi);

/// Random composition of `total` into `parts` positive sizes.
std::vector<Eigen::Index> random_partition(Rng& rng, Eigen::Index total,
                                           std::size_t parts);

/// Prior Σ (n × n), C (p × n), V (p × p), groups over p and λ = 0. With
/// `interagent`, C = I and p = n.
struct EstimationInstance {
  Matrix prior;
  Matrix C;
  Matrix V;
  std::vector<Eigen::Index> groups;
};

EstimationInstance random_estimation_instance(Rng& rng, Eigen::Index max_dim,
                                              bool interagent);

GroupLassoProblem to_problem(const EstimationInstance& inst, Vector lambdas);

/// λ per group drawn log-uniformly around the zero thresholds, so that some
/// groups end up zero and some active.
Vector random_lambdas(Rng& rng, const GroupLassoProblem& problem);

/// N-agent game with horizon T, state/control sizes up to the given maxima.
/// Own-control weights are positive definite; cross weights are zero.
GameSpec random_game(Rng& rng, std::size_t agents, std::size_t horizon,
                     Eigen::Index max_state, Eigen::Index max_control);

/// Full-state observation with one group per agent block.
ObservationModel full_state_observation(const GameSpec& spec, double noise_std);

struct Theorem1SuiteReport {
  std::size_t instances = 0;
  std::size_t vacuous = 0;     // bound was zero; reported, not tested
  std::size_t hypothesis = 0;  // instances run at 0.99 × bound
  std::size_t groups = 0;      // groups across hypothesis instances
  std::size_t resets = 0;      // of those, groups reset to K*
  double max_kkt = 0.0;

  bool all_reset() const { return resets == groups; }
};

/// Interagent instances (C = I) with r_th drawn from (0, 1) and every λ_ρ
/// equal to 0.99 × theorem1_bound.
Theorem1SuiteReport run_theorem1_suite(std::uint64_t seed, std::size_t count,
                                       const SolverSettings& settings = {});

}  // namespace sparse_lqg
