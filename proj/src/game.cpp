#include "sparse_lqg/game.hpp"

#include "sparse_lqg/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

namespace sparse_lqg {
namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kPsdTol = 1e-10;

void require(bool ok, const std::string& what) {
  if (!ok) throw InstanceError(what);
}

bool is_symmetric(const Matrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale;
}

bool is_psd(const Matrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return min_eigenvalue(m) >= -kPsdTol * scale;
}

// Column block of the joint B belonging to `agent`.
auto control_block(const GameSpec& spec, const Matrix& B, std::size_t agent) {
  return B.middleCols(spec.control_offset(agent),
                      spec.agents[agent].control_dim);
}

struct StageSystem {
  Matrix lhs;  // S_t, m × m
  Matrix rhs;  // [Y_Γ Y_α], m × (n+1)
};

// Stacked first-order conditions of all agents at step t given next-step
// value functions.
StageSystem stage_system(const GameSpec& spec, std::size_t t,
                         const std::vector<Matrix>& Z_next,
                         const std::vector<Vector>& zeta_next) {
  const auto n = spec.state_dim();
  const auto m = spec.control_dim();
  const Matrix& A = spec.joint.A[t];
  const Matrix& B = spec.joint.B[t];

  StageSystem sys{Matrix::Zero(m, m), Matrix::Zero(m, n + 1)};
  for (std::size_t i = 0; i < spec.num_agents(); ++i) {
    const auto oi = spec.control_offset(i);
    const auto mi = spec.agents[i].control_dim;
    const Matrix BiZ = control_block(spec, B, i).transpose() * Z_next[i];
    sys.lhs.middleRows(oi, mi) = spec.costs[i].R[t].middleRows(oi, mi) + BiZ * B;
    sys.rhs.block(oi, 0, mi, n) = BiZ * A;
    sys.rhs.block(oi, n, mi, 1) =
        control_block(spec, B, i).transpose() * zeta_next[i] +
        spec.costs[i].r[t].segment(oi, mi);
  }
  return sys;
}

// One backward step of every agent's value function under the affine
// policy u = −Γx − α.
void backup_values(const GameSpec& spec, std::size_t t, const Matrix& gain,
                   const Vector& ff, std::vector<Matrix>& Z,
                   std::vector<Vector>& zeta, std::vector<double>& c) {
  const Matrix F = spec.joint.A[t] - spec.joint.B[t] * gain;
  const Vector beta = -spec.joint.B[t] * ff;
  for (std::size_t i = 0; i < spec.num_agents(); ++i) {
    const auto& cost = spec.costs[i];
    const Matrix& R = cost.R[t];
    const Vector& r = cost.r[t];
    const Vector zb = zeta[i] + Z[i] * beta;
    const double ci = spec.cost_constant(i, t) + 0.5 * ff.dot(R * ff) -
                      r.dot(ff) + 0.5 * beta.dot(Z[i] * beta) +
                      zeta[i].dot(beta) + c[i];
    const Vector zi = cost.q[t] + gain.transpose() * (R * ff - r) +
                      F.transpose() * zb;
    Matrix Zi = cost.Q[t] + gain.transpose() * R * gain +
                F.transpose() * Z[i] * F;
    Z[i] = symmetrized(Zi);
    zeta[i] = zi;
    c[i] = ci;
  }
}

}  // namespace

AgentDynamics AgentDynamics::constant(const Matrix& A, const Matrix& B,
                                      const Matrix& W, std::size_t horizon) {
  AgentDynamics a;
  a.state_dim = A.rows();
  a.control_dim = B.cols();
  a.A.assign(horizon, A);
  a.B.assign(horizon, B);
  a.W.assign(horizon, W);
  return a;
}

Eigen::Index GameSpec::state_dim() const {
  Eigen::Index n = 0;
  for (const auto& a : agents) n += a.state_dim;
  return n;
}

Eigen::Index GameSpec::control_dim() const {
  Eigen::Index m = 0;
  for (const auto& a : agents) m += a.control_dim;
  return m;
}

Eigen::Index GameSpec::state_offset(std::size_t agent) const {
  Eigen::Index off = 0;
  for (std::size_t j = 0; j < agent; ++j) off += agents[j].state_dim;
  return off;
}

Eigen::Index GameSpec::control_offset(std::size_t agent) const {
  Eigen::Index off = 0;
  for (std::size_t j = 0; j < agent; ++j) off += agents[j].control_dim;
  return off;
}

double GameSpec::cost_constant(std::size_t agent, std::size_t t) const {
  const auto& c = costs[agent].constant;
  return c.empty() ? 0.0 : c[t];
}

JointDynamics build_joint_dynamics(const std::vector<AgentDynamics>& agents,
                                   std::size_t horizon) {
  require(!agents.empty(), "game needs at least one agent");
  require(horizon > 0, "horizon must be positive");
  JointDynamics joint;
  joint.A.reserve(horizon);
  joint.B.reserve(horizon);
  joint.W.reserve(horizon);
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const auto& a = agents[k];
    const std::string who = "agent " + std::to_string(k);
    require(a.state_dim > 0 && a.control_dim > 0,
            who + ": dimensions must be positive");
    require(a.A.size() == horizon && a.B.size() == horizon &&
                a.W.size() == horizon,
            who + ": expected " + std::to_string(horizon) +
                " steps of A, B, W");
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::string at = who + ", t=" + std::to_string(t);
      require(a.A[t].rows() == a.state_dim && a.A[t].cols() == a.state_dim,
              at + ": A has wrong shape");
      require(a.B[t].rows() == a.state_dim && a.B[t].cols() == a.control_dim,
              at + ": B has wrong shape");
      require(a.W[t].rows() == a.state_dim && a.W[t].cols() == a.state_dim,
              at + ": W has wrong shape");
      require(is_symmetric(a.W[t]) && is_psd(a.W[t]),
              at + ": W must be symmetric PSD");
    }
  }
  std::vector<Matrix> As(agents.size());
  std::vector<Matrix> Bs(agents.size());
  std::vector<Matrix> Ws(agents.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t k = 0; k < agents.size(); ++k) {
      As[k] = agents[k].A[t];
      Bs[k] = agents[k].B[t];
      Ws[k] = agents[k].W[t];
    }
    joint.A.push_back(block_diag(As));
    joint.B.push_back(block_diag(Bs));
    joint.W.push_back(block_diag(Ws));
  }
  return joint;
}

void GameSpec::validate() const {
  const auto n = state_dim();
  const auto m = control_dim();
  const std::size_t T = horizon;
  require(joint.A.size() == T && joint.B.size() == T && joint.W.size() == T,
          "joint dynamics do not cover the horizon");
  require(costs.size() == agents.size(), "one cost per agent required");
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const auto& c = costs[i];
    const std::string who = "cost of agent " + std::to_string(i);
    require(c.Q.size() == T + 1 && c.q.size() == T + 1,
            who + ": Q, q need T+1 entries");
    require(c.R.size() == T && c.r.size() == T, who + ": R, r need T entries");
    require(c.constant.empty() || c.constant.size() == T + 1,
            who + ": constant needs T+1 entries");
    for (std::size_t t = 0; t <= T; ++t) {
      const std::string at = who + ", t=" + std::to_string(t);
      require(c.Q[t].rows() == n && c.Q[t].cols() == n, at + ": Q shape");
      require(c.q[t].size() == n, at + ": q size");
      require(is_symmetric(c.Q[t]), at + ": Q must be symmetric");
      if (t == T) break;
      require(c.R[t].rows() == m && c.R[t].cols() == m, at + ": R shape");
      require(c.r[t].size() == m, at + ": r size");
      require(is_symmetric(c.R[t]), at + ": R must be symmetric");
      const auto oi = control_offset(i);
      const auto mi = agents[i].control_dim;
      Eigen::LLT<Matrix> llt(symmetrized(c.R[t].block(oi, oi, mi, mi)));
      require(llt.info() == Eigen::Success,
              at + ": own control block of R must be positive definite");
    }
  }
  require(initial_mean.size() == n, "initial mean has wrong size");
  require(initial_covariance.rows() == n && initial_covariance.cols() == n,
          "initial covariance has wrong shape");
  require(is_symmetric(initial_covariance) && is_psd(initial_covariance),
          "initial covariance must be symmetric PSD");
}

GameSpec make_game(std::vector<AgentDynamics> agents, std::size_t horizon,
                   std::vector<AgentCost> costs, Vector initial_mean,
                   Matrix initial_covariance) {
  GameSpec spec;
  spec.joint = build_joint_dynamics(agents, horizon);
  spec.agents = std::move(agents);
  spec.horizon = horizon;
  spec.costs = std::move(costs);
  spec.initial_mean = std::move(initial_mean);
  spec.initial_covariance = std::move(initial_covariance);
  spec.validate();
  return spec;
}

NashStrategy solve_feedback_nash(const GameSpec& spec) {
  const std::size_t N = spec.num_agents();
  const std::size_t T = spec.horizon;
  const auto n = spec.state_dim();

  NashStrategy out;
  out.gain.resize(T);
  out.feedforward.resize(T);
  out.value_matrix.assign(N, MatrixSeq(T + 1));
  out.value_vector.assign(N, VectorSeq(T + 1));
  out.value_constant.assign(N, std::vector<double>(T + 1, 0.0));

  std::vector<Matrix> Z(N);
  std::vector<Vector> zeta(N);
  std::vector<double> c(N);
  for (std::size_t i = 0; i < N; ++i) {
    Z[i] = symmetrized(spec.costs[i].Q[T]);
    zeta[i] = spec.costs[i].q[T];
    c[i] = spec.cost_constant(i, T);
    out.value_matrix[i][T] = Z[i];
    out.value_vector[i][T] = zeta[i];
    out.value_constant[i][T] = c[i];
  }

  for (std::size_t step = T; step-- > 0;) {
    const StageSystem sys = stage_system(spec, step, Z, zeta);
    Eigen::PartialPivLU<Matrix> lu(sys.lhs);
    const double rcond = lu.rcond();
    if (!(rcond >= kNashRcondFloor)) throw NashSolveError(step, rcond);
    const Matrix X = lu.solve(sys.rhs);
    out.gain[step] = X.leftCols(n);
    out.feedforward[step] = X.col(n);

    backup_values(spec, step, out.gain[step], out.feedforward[step], Z, zeta,
                  c);
    for (std::size_t i = 0; i < N; ++i) {
      out.value_matrix[i][step] = Z[i];
      out.value_vector[i][step] = zeta[i];
      out.value_constant[i][step] = c[i];
    }
  }
  return out;
}

double foc_residual(const GameSpec& spec, const NashStrategy& strategy) {
  const std::size_t N = spec.num_agents();
  const std::size_t T = spec.horizon;
  const auto n = spec.state_dim();
  const auto m = spec.control_dim();
  require(strategy.gain.size() == T && strategy.feedforward.size() == T,
          "strategy horizon does not match game");

  std::vector<Matrix> Z(N);
  std::vector<Vector> zeta(N);
  std::vector<double> c(N);
  for (std::size_t i = 0; i < N; ++i) {
    Z[i] = symmetrized(spec.costs[i].Q[T]);
    zeta[i] = spec.costs[i].q[T];
    c[i] = spec.cost_constant(i, T);
  }

  double worst = 0.0;
  for (std::size_t step = T; step-- > 0;) {
    const Matrix& gain = strategy.gain[step];
    const Vector& ff = strategy.feedforward[step];
    require(gain.rows() == m && gain.cols() == n && ff.size() == m,
            "strategy dimensions do not match game at t=" +
                std::to_string(step));
    const StageSystem sys = stage_system(spec, step, Z, zeta);
    Matrix X(m, n + 1);
    X << gain, ff;
    const double num = (sys.lhs * X - sys.rhs).norm();
    const double den = sys.rhs.norm();
    worst = std::max(worst, den > 0.0 ? num / den : num);
    backup_values(spec, step, gain, ff, Z, zeta, c);
  }
  return worst;
}

Matrix agent_gain_rows(const GameSpec& spec, const Matrix& gain,
                       std::size_t agent) {
  return gain.middleRows(spec.control_offset(agent),
                         spec.agents[agent].control_dim);
}

}  // namespace sparse_lqg
