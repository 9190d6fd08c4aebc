#include "sparse_lqg/errors.hpp"
#include "sparse_lqg/game.hpp"
#include "sparse_lqg/instances.hpp"
#include "sparse_lqg/simulator.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace sparse_lqg;

namespace {

using sparse_lqg::testing::Lqr;
using sparse_lqg::testing::lqr;
using sparse_lqg::testing::noiseless_cost;

GameSpec scalar_game(std::size_t T, double a, double b, double q, double r) {
  const Matrix A = Matrix::Constant(1, 1, a);
  const Matrix B = Matrix::Constant(1, 1, b);
  std::vector<AgentDynamics> agents{
      AgentDynamics::constant(A, B, Matrix::Zero(1, 1), T)};
  AgentCost c;
  c.Q.assign(T + 1, Matrix::Constant(1, 1, q));
  c.q.assign(T + 1, Vector::Zero(1));
  c.R.assign(T, Matrix::Constant(1, 1, r));
  c.r.assign(T, Vector::Zero(1));
  return make_game(std::move(agents), T, {c}, Vector::Ones(1),
                   Matrix::Zero(1, 1));
}

}  // namespace

TEST(Nash, SingleAgentMatchesLqr) {
  Rng rng(101);
  for (int k = 0; k < 20; ++k) {
    const GameSpec spec = random_game(rng, 1, 12, 4, 3);
    const NashStrategy s = solve_feedback_nash(spec);
    const Lqr ref = lqr(spec);
    for (std::size_t t = 0; t < spec.horizon; ++t) {
      const double scale = std::max(1.0, ref.gain[t].norm());
      EXPECT_LT((s.gain[t] - ref.gain[t]).norm() / scale, 1e-9);
      EXPECT_LT((s.feedforward[t] - ref.feedforward[t]).norm() /
                    std::max(1.0, ref.feedforward[t].norm()),
                1e-9);
      EXPECT_LT((s.value_matrix[0][t] - ref.P[t]).norm() /
                    std::max(1.0, ref.P[t].norm()),
                1e-9);
    }
  }
}

TEST(Nash, ScalarOneStepClosedForm) {
  // One step: u = −(b q a / (r + b² q)) x.
  const GameSpec spec = scalar_game(1, 1.5, 0.5, 2.0, 1.0);
  const NashStrategy s = solve_feedback_nash(spec);
  EXPECT_NEAR(s.gain[0](0, 0), 0.5 * 2.0 * 1.5 / (1.0 + 0.25 * 2.0), 1e-14);
  EXPECT_NEAR(s.feedforward[0](0), 0.0, 1e-15);
}

TEST(Nash, FocResidualOnRandomGames) {
  Rng rng(202);
  std::uniform_int_distribution<std::size_t> agents(1, 3);
  std::uniform_int_distribution<std::size_t> horizon(1, 20);
  for (int k = 0; k < 40; ++k) {
    const GameSpec spec =
        random_game(rng, agents(rng), horizon(rng), 3, 2);
    const NashStrategy s = solve_feedback_nash(spec);
    EXPECT_LE(foc_residual(spec, s), 1e-9);
  }
}

TEST(Nash, PerturbedStrategyFailsFoc) {
  Rng rng(203);
  const GameSpec spec = random_game(rng, 2, 5, 2, 2);
  NashStrategy s = solve_feedback_nash(spec);
  s.gain[2](0, 0) += 0.1;
  EXPECT_GT(foc_residual(spec, s), 1e-4);
}

TEST(Nash, NoiselessCostMatchesValueCertificate) {
  Rng rng(204);
  for (int k = 0; k < 20; ++k) {
    const GameSpec spec = random_game(rng, 1 + k % 3, 10, 3, 2);
    const NashStrategy s = solve_feedback_nash(spec);
    for (std::size_t i = 0; i < spec.num_agents(); ++i) {
      const double certificate = sparse_lqg::testing::value_certificate(spec, s, i);
      const double realized = noiseless_cost(spec, s, i);
      EXPECT_LE(std::abs(realized - certificate),
                1e-8 * std::max(1.0, std::abs(certificate)));
    }
  }
}

TEST(Nash, DecoupledAgentsSolveIndependently) {
  // Two agents with private costs on their own states: each gain block equals
  // its own LQR gain, cross blocks vanish.
  const std::size_t T = 6;
  Matrix A(1, 1), B(1, 1);
  A << 1.2;
  B << 0.7;
  std::vector<AgentDynamics> agents(
      2, AgentDynamics::constant(A, B, Matrix::Zero(1, 1), T));
  std::vector<AgentCost> costs(2);
  for (std::size_t i = 0; i < 2; ++i) {
    Matrix Q = Matrix::Zero(2, 2);
    Q(i, i) = 1.0 + i;
    Matrix R = Matrix::Zero(2, 2);
    R(i, i) = 0.5;
    costs[i].Q.assign(T + 1, Q);
    costs[i].q.assign(T + 1, Vector::Zero(2));
    costs[i].R.assign(T, R);
    costs[i].r.assign(T, Vector::Zero(2));
  }
  const GameSpec spec = make_game(agents, T, costs, Vector::Ones(2),
                                  Matrix::Zero(2, 2));
  const NashStrategy s = solve_feedback_nash(spec);
  for (std::size_t i = 0; i < 2; ++i) {
    const GameSpec single = scalar_game(T, 1.2, 0.7, 1.0 + i, 0.5);
    const NashStrategy ref = solve_feedback_nash(single);
    for (std::size_t t = 0; t < T; ++t) {
      EXPECT_NEAR(s.gain[t](i, i), ref.gain[t](0, 0), 1e-12);
      EXPECT_EQ(s.gain[t](i, 1 - i), 0.0);
    }
  }
}

TEST(Nash, SingularStageRaises) {
  // Agent 0's terminal weight −1 on its own state cancels R = 1, so the first
  // row of the stacked stage matrix vanishes.
  const std::size_t T = 1;
  const Matrix one = Matrix::Ones(1, 1);
  std::vector<AgentDynamics> agents(
      2, AgentDynamics::constant(one, one, Matrix::Zero(1, 1), T));
  std::vector<AgentCost> costs(2);
  for (std::size_t i = 0; i < 2; ++i) {
    Matrix R = Matrix::Zero(2, 2);
    R(i, i) = 1.0;
    Matrix terminal = Matrix::Zero(2, 2);
    if (i == 0) terminal(0, 0) = -1.0;
    costs[i].Q = {Matrix::Zero(2, 2), terminal};
    costs[i].q.assign(2, Vector::Zero(2));
    costs[i].R = {R};
    costs[i].r = {Vector::Zero(2)};
  }
  const GameSpec spec = make_game(agents, T, costs, Vector::Ones(2),
                                  Matrix::Zero(2, 2));
  try {
    solve_feedback_nash(spec);
    FAIL() << "expected NashSolveError";
  } catch (const NashSolveError& e) {
    EXPECT_EQ(e.step(), 0u);
  }
}

TEST(Nash, ValidationRejectsBadShapes) {
  const Matrix A = Matrix::Identity(2, 2);
  const Matrix B = Matrix::Ones(2, 1);
  std::vector<AgentDynamics> agents{
      AgentDynamics::constant(A, B, Matrix::Zero(2, 2), 3)};
  AgentCost c;
  c.Q.assign(4, Matrix::Identity(2, 2));
  c.q.assign(4, Vector::Zero(2));
  c.R.assign(3, Matrix::Identity(1, 1));
  c.r.assign(3, Vector::Zero(1));
  EXPECT_NO_THROW(make_game(agents, 3, {c}, Vector::Zero(2), Matrix::Zero(2, 2)));

  auto bad = c;
  bad.R[1] = Matrix::Zero(1, 1);  // own control weight must be PD
  EXPECT_THROW(make_game(agents, 3, {bad}, Vector::Zero(2), Matrix::Zero(2, 2)),
               InstanceError);
  bad = c;
  bad.Q.pop_back();
  EXPECT_THROW(make_game(agents, 3, {bad}, Vector::Zero(2), Matrix::Zero(2, 2)),
               InstanceError);
  EXPECT_THROW(make_game(agents, 3, {c}, Vector::Zero(3), Matrix::Zero(2, 2)),
               InstanceError);
  EXPECT_THROW(make_game(agents, 3, {c}, Vector::Zero(2), -Matrix::Identity(2, 2)),
               InstanceError);
}

TEST(Nash, AgentGainRowsSlicesControlBlock) {
  Rng rng(205);
  const GameSpec spec = random_game(rng, 3, 2, 2, 2);
  const NashStrategy s = solve_feedback_nash(spec);
  const Matrix rows = agent_gain_rows(spec, s.gain[0], 1);
  EXPECT_EQ(rows, s.gain[0].middleRows(spec.control_offset(1),
                                       spec.agents[1].control_dim));
}
