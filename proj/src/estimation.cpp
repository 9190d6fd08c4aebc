#include "sparse_lqg/estimation.hpp"

#include "sparse_lqg/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <numeric>
#include <string>

namespace sparse_lqg {

AgentObservation AgentObservation::constant(const Matrix& C, const Matrix& V,
                                            std::vector<Eigen::Index> groups,
                                            std::size_t horizon) {
  AgentObservation obs;
  obs.C.assign(horizon + 1, C);
  obs.V.assign(horizon + 1, V);
  obs.groups = std::move(groups);
  return obs;
}

void ObservationModel::validate(const GameSpec& spec) const {
  const auto n = spec.state_dim();
  if (agents.size() != spec.num_agents()) {
    throw InstanceError("observation model needs one entry per agent");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    const std::string who = "observation of agent " + std::to_string(i);
    if (a.C.size() != spec.horizon + 1 || a.V.size() != spec.horizon + 1) {
      throw InstanceError(who + ": C, V need T+1 entries");
    }
    const auto p = a.obs_dim();
    if (p <= 0) throw InstanceError(who + ": empty observation");
    if (a.groups.empty() ||
        std::any_of(a.groups.begin(), a.groups.end(),
                    [](Eigen::Index g) { return g <= 0; }) ||
        std::accumulate(a.groups.begin(), a.groups.end(), Eigen::Index{0}) !=
            p) {
      throw InstanceError(who + ": group sizes must be positive and sum to " +
                          std::to_string(p));
    }
    for (std::size_t t = 0; t <= spec.horizon; ++t) {
      const std::string at = who + ", t=" + std::to_string(t);
      if (a.C[t].rows() != p || a.C[t].cols() != n) {
        throw InstanceError(at + ": C has wrong shape");
      }
      if (a.V[t].rows() != p || a.V[t].cols() != p) {
        throw InstanceError(at + ": V has wrong shape");
      }
      const double scale = std::max(1.0, a.V[t].cwiseAbs().maxCoeff());
      if ((a.V[t] - a.V[t].transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale ||
          min_eigenvalue(a.V[t]) < -1e-10 * scale) {
        throw InstanceError(at + ": V must be symmetric PSD");
      }
    }
  }
}

CouplingMatrices build_coupling_matrices(const GameSpec& spec,
                                         const NashStrategy& strategy,
                                         std::size_t t) {
  const std::size_t N = spec.num_agents();
  const auto n = spec.state_dim();
  const Matrix& A = spec.joint.A[t];
  const Matrix& B = spec.joint.B[t];
  const Matrix& gain = strategy.gain[t];

  const Matrix closed = A - B * gain;
  std::vector<Matrix> copies(N, closed);

  CouplingMatrices out{block_diag(copies), Matrix::Zero(N * n, N * n)};
  // B E^j Γ keeps only agent j's control rows of Γ.
  for (std::size_t j = 0; j < N; ++j) {
    const auto oj = spec.control_offset(j);
    const auto mj = spec.agents[j].control_dim;
    const Matrix block = B.middleCols(oj, mj) * gain.middleRows(oj, mj);
    for (std::size_t i = 0; i < N; ++i) {
      out.mixing.block(i * n, j * n, n, n) = block;
    }
  }
  return out;
}

Matrix initial_joint_prior(const GameSpec& spec) {
  return tile(symmetrized(spec.initial_covariance), spec.num_agents());
}

Matrix propagate_prior_covariance(const Matrix& posterior,
                                  const CouplingMatrices& coupling,
                                  const Matrix& process_noise,
                                  std::size_t num_agents) {
  const Matrix F = coupling.closed_loop + coupling.mixing;
  Matrix prior = F * posterior * F.transpose() + tile(process_noise, num_agents);
  return symmetrized(prior);
}

Matrix posterior_covariance_update(const Matrix& prior,
                                   std::span<const Matrix> gains,
                                   const ObservationModel& obs, std::size_t t) {
  const std::size_t N = obs.num_agents();
  if (gains.size() != N) {
    throw InstanceError("one gain per agent required");
  }
  const Eigen::Index n = prior.rows() / static_cast<Eigen::Index>(N);
  std::vector<Matrix> KC(N);
  std::vector<Matrix> KV(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Matrix& C = obs.agents[i].C[t];
    if (gains[i].rows() != n || gains[i].cols() != C.rows()) {
      throw InstanceError("gain of agent " + std::to_string(i) +
                          " has wrong shape");
    }
    KC[i] = gains[i] * C;
    KV[i] = gains[i];
  }
  const Matrix I_minus_KC =
      Matrix::Identity(prior.rows(), prior.cols()) - block_diag(KC);
  const Matrix KK = block_diag(KV);
  std::vector<Matrix> Vs(N);
  for (std::size_t i = 0; i < N; ++i) Vs[i] = obs.agents[i].V[t];
  const Matrix V = block_diag(Vs);
  Matrix post = I_minus_KC * prior * I_minus_KC.transpose() +
                KK * V * KK.transpose();
  return symmetrized(post);
}

Matrix extract_agent_block(const Matrix& joint, std::size_t agent,
                           Eigen::Index block) {
  const auto k = static_cast<Eigen::Index>(agent);
  if (block <= 0 || (k + 1) * block > joint.rows()) {
    throw InstanceError("agent index " + std::to_string(agent) +
                        " out of range");
  }
  return joint.block(k * block, k * block, block, block);
}

Matrix joseph_update(const Matrix& prior, const Matrix& gain, const Matrix& C,
                     const Matrix& V) {
  const Matrix I_KC = Matrix::Identity(prior.rows(), prior.cols()) - gain * C;
  return symmetrized(I_KC * prior * I_KC.transpose() +
                     gain * V * gain.transpose());
}

Matrix innovation_covariance(const Matrix& prior, const Matrix& C,
                             const Matrix& V) {
  return symmetrized(C * prior * C.transpose() + V);
}

Matrix optimal_gain(const Matrix& prior, const Matrix& C, const Matrix& V) {
  const Matrix CS = C * symmetrized(prior);
  // Nothing to correct: the least-norm gain is zero whatever M is.
  if (CS.isZero(0.0)) return Matrix::Zero(C.cols(), C.rows());
  const Matrix M = innovation_covariance(prior, C, V);
  Eigen::PartialPivLU<Matrix> lu(M);
  const double rcond = lu.rcond();
  if (!(rcond >= kInnovationRcondFloor)) throw DegenerateInnovationError(rcond);
  // K M = Σ⁻Cᵀ with M symmetric  ⇔  M Kᵀ = C Σ⁻.
  return lu.solve(CS).transpose();
}

Vector predict_estimate(const Vector& estimate, const Vector& estimated_control,
                        const Matrix& A, const Matrix& B) {
  return A * estimate + B * estimated_control;
}

Vector correct_estimate(const Vector& prior_estimate, const Vector& observation,
                        const Matrix& gain, const Matrix& C) {
  return prior_estimate + gain * (observation - C * prior_estimate);
}

Vector estimated_joint_control(const Vector& estimate, const Matrix& gain,
                               const Vector& feedforward) {
  return -gain * estimate - feedforward;
}

}  // namespace sparse_lqg
