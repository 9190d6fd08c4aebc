#pragma once

// Two agents, each a discretized double integrator in one axis, both seeing
// the full joint state through noisy sensors (one group per agent).

#include "sparse_lqg/estimation.hpp"
#include "sparse_lqg/game.hpp"

namespace sparse_lqg::testing {

struct ToyGame {
  GameSpec spec;
  ObservationModel observation;
};

inline ToyGame toy_two_agent_game(std::size_t horizon = 10) {
  const double dt = 0.2;
  Matrix A(2, 2);
  A << 1.0, dt, 0.0, 1.0;
  Matrix B(2, 1);
  B << 0.5 * dt * dt, dt;
  Matrix W = Matrix::Zero(2, 2);
  W.diagonal() << 0.01, 0.04;
  std::vector<AgentDynamics> agents(
      2, AgentDynamics::constant(A, B, W, horizon));

  std::vector<AgentCost> costs(2);
  for (std::size_t i = 0; i < 2; ++i) {
    const std::size_t j = 1 - i;
    Matrix Q = Matrix::Zero(4, 4);
    // Own position to the origin, plus the gap to the other agent.
    Q(2 * i, 2 * i) += 1.0;
    Q(2 * i, 2 * i) += 0.5;
    Q(2 * j, 2 * j) += 0.5;
    Q(2 * i, 2 * j) -= 0.5;
    Q(2 * j, 2 * i) -= 0.5;
    Matrix R = Matrix::Zero(2, 2);
    R(i, i) = 0.3;
    costs[i].Q.assign(horizon + 1, Q);
    costs[i].q.assign(horizon + 1, Vector::Zero(4));
    costs[i].R.assign(horizon, R);
    costs[i].r.assign(horizon, Vector::Zero(2));
  }
  Vector mean(4);
  mean << 1.0, 0.0, -1.0, 0.5;
  Matrix cov = Matrix::Zero(4, 4);
  cov.diagonal() << 0.2, 0.1, 0.3, 0.1;

  ToyGame g;
  g.spec = make_game(std::move(agents), horizon, std::move(costs), mean, cov);
  Matrix V = Matrix::Zero(4, 4);
  V.diagonal() << 0.05, 0.2, 0.05, 0.2;
  for (std::size_t i = 0; i < 2; ++i) {
    g.observation.agents.push_back(AgentObservation::constant(
        Matrix::Identity(4, 4), V, {2, 2}, horizon));
  }
  g.observation.validate(g.spec);
  return g;
}

}  // namespace sparse_lqg::testing
