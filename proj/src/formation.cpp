#include "sparse_lqg/formation.hpp"

#include "sparse_lqg/errors.hpp"

#include <cmath>

namespace sparse_lqg {
namespace {

constexpr Eigen::Index kRobotState = 4;
constexpr Eigen::Index kRobotControl = 2;
constexpr Eigen::Index kJointState = kRobotState * kFormationRobots;
constexpr Eigen::Index kJointControl = kRobotControl * kFormationRobots;

// 2 × 12 selector of robot `r`'s position.
Matrix position_selector(std::size_t r) {
  Matrix sel = Matrix::Zero(2, kJointState);
  sel.block(0, static_cast<Eigen::Index>(r) * kRobotState, 2, 2).setIdentity();
  return sel;
}

Eigen::Vector2d position_of(const Vector& x, std::size_t r) {
  return x.segment<2>(static_cast<Eigen::Index>(r) * kRobotState);
}

Matrix robot_block(double pos_var, double vel_var) {
  Matrix b = Matrix::Zero(kRobotState, kRobotState);
  b.diagonal() << pos_var, pos_var, vel_var, vel_var;
  return b;
}

Matrix joint_block(double pos_var, double vel_var) {
  const Matrix b = robot_block(pos_var, vel_var);
  std::vector<Matrix> blocks(kFormationRobots, b);
  return block_diag(blocks);
}

// Adds ½‖D x − d‖² to (Q, q, c) in the ½xᵀQx + qᵀx + c form.
void add_squared_residual(const Matrix& D, const Eigen::Vector2d& d, Matrix& Q,
                          Vector& q, double& c) {
  Q += D.transpose() * D;
  q -= D.transpose() * d;
  c += 0.5 * d.squaredNorm();
}

}  // namespace

std::array<std::array<Eigen::Vector2d, kFormationRobots>, kFormationRobots>
FormationParams::default_displacements() {
  std::array<std::array<Eigen::Vector2d, kFormationRobots>, kFormationRobots> d;
  for (auto& row : d) row.fill(Eigen::Vector2d::Zero());
  d[1][0] = {-2.0, -2.0};
  d[2][0] = {2.0, -2.0};
  d[1][2] = {4.0, 0.0};
  d[2][1] = {-4.0, 0.0};
  return d;
}

Eigen::Vector2d reference_position(const FormationParams& params,
                                   std::size_t k) {
  const double s = static_cast<double>(k) * params.dt;
  return {params.path_amplitude * std::cos(params.path_x_rate * s),
          params.path_amplitude * std::sin(params.path_y_rate * s)};
}

FormationGame build_formation_game(const FormationParams& params) {
  if (params.horizon == 0 || !(params.dt > 0.0)) {
    throw InstanceError("formation: horizon and dt must be positive");
  }
  const std::size_t T = params.horizon;
  const double dt = params.dt;

  Matrix A = Matrix::Identity(kRobotState, kRobotState);
  A.block(0, 2, 2, 2) = dt * Matrix::Identity(2, 2);
  Matrix B = Matrix::Zero(kRobotState, kRobotControl);
  B.topRows(2) = 0.5 * dt * dt * Matrix::Identity(2, 2);
  B.bottomRows(2) = dt * Matrix::Identity(2, 2);
  const double wv = params.process_velocity_std * params.process_velocity_std;
  const Matrix W = robot_block(0.0, wv);

  std::vector<AgentDynamics> agents(
      kFormationRobots, AgentDynamics::constant(A, B, W, T));

  std::vector<AgentCost> costs(kFormationRobots);
  for (std::size_t i = 0; i < kFormationRobots; ++i) {
    auto& c = costs[i];
    c.Q.assign(T + 1, Matrix::Zero(kJointState, kJointState));
    c.q.assign(T + 1, Vector::Zero(kJointState));
    c.constant.assign(T + 1, 0.0);
    Matrix R = Matrix::Zero(kJointControl, kJointControl);
    // The followers' objective sums ‖u^i‖² once per other robot.
    const double control_weight = i == 0 ? 1.0 : kFormationRobots - 1.0;
    R.block(static_cast<Eigen::Index>(i) * kRobotControl,
            static_cast<Eigen::Index>(i) * kRobotControl, kRobotControl,
            kRobotControl) = control_weight * Matrix::Identity(2, 2);
    c.R.assign(T, R);
    c.r.assign(T, Vector::Zero(kJointControl));

    for (std::size_t t = 0; t <= T; ++t) {
      if (i == 0) {
        add_squared_residual(position_selector(0),
                             reference_position(params, t + 1), c.Q[t], c.q[t],
                             c.constant[t]);
        continue;
      }
      for (std::size_t j = 0; j < kFormationRobots; ++j) {
        if (j == i) continue;
        add_squared_residual(position_selector(i) - position_selector(j),
                             params.displacement[i][j], c.Q[t], c.q[t],
                             c.constant[t]);
      }
    }
  }

  Vector mean = Vector::Zero(kJointState);
  if (params.initial_mean) {
    mean = *params.initial_mean;
  } else {
    const Eigen::Vector2d p0 = reference_position(params, 1);
    mean.segment<2>(0) = p0;
    for (std::size_t i = 1; i < kFormationRobots; ++i) {
      mean.segment<2>(static_cast<Eigen::Index>(i) * kRobotState) =
          p0 + params.displacement[i][0];
    }
  }
  const Matrix initial_cov =
      joint_block(params.initial_position_std * params.initial_position_std,
                  params.initial_velocity_std * params.initial_velocity_std);

  FormationGame game;
  game.spec = make_game(std::move(agents), T, std::move(costs), mean,
                        initial_cov);

  const Matrix V =
      joint_block(params.observation_position_std *
                      params.observation_position_std,
                  params.observation_velocity_std *
                      params.observation_velocity_std);
  const Matrix C = Matrix::Identity(kJointState, kJointState);
  for (std::size_t i = 0; i < kFormationRobots; ++i) {
    game.observation.agents.push_back(AgentObservation::constant(
        C, V, std::vector<Eigen::Index>(kFormationRobots, kRobotState), T));
  }
  game.observation.validate(game.spec);
  return game;
}

FormationMetrics compute_metrics(const std::vector<SimulationTrace>& traces,
                                 const GainSchedule& schedule,
                                 const GameSpec& spec,
                                 const FormationParams& params) {
  const std::size_t N = spec.num_agents();
  const std::size_t steps = schedule.num_steps();
  FormationMetrics m;
  m.usage.assign(N, {});
  m.usage_fraction.assign(N, 0.0);
  m.group_usage_fraction.assign(N, {});
  m.covariance_norm.assign(N, {});
  m.peak_covariance_norm.assign(N, 0.0);

  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t groups = schedule.steps.front()[i].active.size();
    m.group_usage_fraction[i].assign(groups, 0.0);
    std::size_t used = 0;
    for (std::size_t t = 0; t < steps; ++t) {
      const auto& step = schedule.steps[t][i];
      m.usage[i].push_back(step.active);
      for (std::size_t g = 0; g < groups; ++g) {
        if (step.active[g]) {
          ++used;
          m.group_usage_fraction[i][g] += 1.0;
        }
      }
      const double nrm = step.posterior.norm();
      m.covariance_norm[i].push_back(nrm);
      m.peak_covariance_norm[i] = std::max(m.peak_covariance_norm[i], nrm);
    }
    m.usage_fraction[i] =
        static_cast<double>(used) / static_cast<double>(steps * groups);
    for (auto& g : m.group_usage_fraction[i]) g /= static_cast<double>(steps);
  }

  m.runs = traces.size();
  if (traces.empty()) return m;

  const double runs = static_cast<double>(traces.size());
  m.leader_tracking_error.assign(steps, 0.0);
  m.formation_error.assign(kFormationPairs.size(),
                           std::vector<double>(steps, 0.0));
  m.mean_cost.assign(N, 0.0);
  for (const auto& tr : traces) {
    for (std::size_t t = 0; t < steps; ++t) {
      const double err =
          (position_of(tr.state[t], 0) - reference_position(params, t + 1))
              .norm();
      m.leader_tracking_error[t] += err / runs;
      m.leader_tracking_cost += err * err / runs;
      for (std::size_t k = 0; k < kFormationPairs.size(); ++k) {
        const auto [i, j] = kFormationPairs[k];
        m.formation_error[k][t] +=
            (position_of(tr.state[t], i) - position_of(tr.state[t], j) -
             params.displacement[i][j])
                .norm() /
            runs;
      }
    }
    const auto cost = realized_cost(tr, spec);
    for (std::size_t i = 0; i < N; ++i) m.mean_cost[i] += cost[i] / runs;
  }
  return m;
}

}  // namespace sparse_lqg
