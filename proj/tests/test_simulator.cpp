#include "sparse_lqg/errors.hpp"
#include "sparse_lqg/instances.hpp"
#include "sparse_lqg/simulator.hpp"
#include "toy_game.hpp"

#include <gtest/gtest.h>

using namespace sparse_lqg;
using sparse_lqg::testing::toy_two_agent_game;

namespace {

void expect_same_schedule(const GainSchedule& a, const GainSchedule& b) {
  ASSERT_EQ(a.num_steps(), b.num_steps());
  for (std::size_t t = 0; t < a.num_steps(); ++t) {
    for (std::size_t i = 0; i < a.steps[t].size(); ++i) {
      const auto& x = a.steps[t][i];
      const auto& y = b.steps[t][i];
      EXPECT_EQ(x.gain, y.gain);
      EXPECT_EQ(x.pre_threshold, y.pre_threshold);
      EXPECT_EQ(x.active, y.active);
      EXPECT_EQ(x.posterior, y.posterior);
      EXPECT_EQ(x.lambdas, y.lambdas);
    }
    EXPECT_EQ(a.joint_posterior[t], b.joint_posterior[t]);
  }
}

}  // namespace

TEST(Simulator, ParallelScheduleIsBitIdentical) {
  const auto g = toy_two_agent_game();
  const NashStrategy s = solve_feedback_nash(g.spec);
  SimulationConfig cfg;
  cfg.policy = ConstantLambda{0.05};
  expect_same_schedule(compute_gain_schedule(g.spec, g.observation, s, cfg),
                       compute_gain_schedule_serial(g.spec, g.observation, s, cfg));
}

TEST(Simulator, ParallelRunsAreBitIdentical) {
  const auto g = toy_two_agent_game();
  const NashStrategy s = solve_feedback_nash(g.spec);
  SimulationConfig cfg;
  cfg.policy = ConstantLambda{0.05};
  cfg.runs = 7;
  cfg.seed = 99;
  const auto sched = compute_gain_schedule(g.spec, g.observation, s, cfg);
  const auto par = run(g.spec, g.observation, s, sched, cfg);
  const auto ser = run_serial(g.spec, g.observation, s, sched, cfg);
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t r = 0; r < par.size(); ++r) {
    EXPECT_EQ(par[r].state, ser[r].state);
    EXPECT_EQ(par[r].estimate, ser[r].estimate);
    EXPECT_EQ(par[r].control, ser[r].control);
  }
  cfg.runs = 600;
  const auto ec = accumulate_error_covariance(g.spec, g.observation, s, sched, cfg);
  const auto es =
      accumulate_error_covariance_serial(g.spec, g.observation, s, sched, cfg);
  EXPECT_EQ(ec, es);
}

TEST(Simulator, SeedDeterminesTraces) {
  const auto g = toy_two_agent_game();
  const NashStrategy s = solve_feedback_nash(g.spec);
  SimulationConfig cfg;
  cfg.seed = 5;
  const auto sched = compute_gain_schedule(g.spec, g.observation, s, cfg);
  const auto a = simulate_run(g.spec, g.observation, s, sched, cfg, 3);
  const auto b = simulate_run(g.spec, g.observation, s, sched, cfg, 3);
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(a.observation, b.observation);
  const auto c = simulate_run(g.spec, g.observation, s, sched, cfg, 4);
  EXPECT_NE(a.state, c.state);
  cfg.seed = 6;
  const auto d = simulate_run(g.spec, g.observation, s, sched, cfg, 3);
  EXPECT_NE(a.state, d.state);
}

TEST(Simulator, ScheduleDoesNotDependOnSeed) {
  const auto g = toy_two_agent_game();
  const NashStrategy s = solve_feedback_nash(g.spec);
  SimulationConfig cfg;
  cfg.policy = ConstantLambda{0.05};
  const auto a = compute_gain_schedule(g.spec, g.observation, s, cfg);
  cfg.seed = 12345;
  cfg.runs = 9;
  expect_same_schedule(a, compute_gain_schedule(g.spec, g.observation, s, cfg));
}

TEST(Simulator, ZeroLambdaKeepsEverySensorAndOptimalGain) {
  const auto g = toy_two_agent_game();
  const NashStrategy s = solve_feedback_nash(g.spec);
  const auto sched = compute_gain_schedule(g.spec, g.observation, s, {});
  for (const auto& row : sched.steps) {
    for (const auto& step : row) {
      for (const bool a : step.active) EXPECT_TRUE(a);
      EXPECT_EQ(step.gain, step.optimal);
    }
  }
}

TEST(Simulator, LargeLambdaDropsSensors) {
  const auto g = toy_two_agent_game();
  const NashStrategy s = solve_feedback_nash(g.spec);
  SimulationConfig cfg;
  cfg.policy = ConstantLambda{1e6};
  const auto sched = compute_gain_schedule(g.spec, g.observation, s, cfg);
  for (const auto& row : sched.steps) {
    for (const auto& step : row) {
      EXPECT_EQ(step.gain, Matrix::Zero(4, 4));
    }
  }
  // Without corrections each agent's error covariance only grows.
  EXPECT_GT(sched.steps.back()[0].posterior.trace(),
            sched.steps.front()[0].posterior.trace());
}

TEST(Simulator, NoiselessRunFollowsNashRollout) {
  auto g = toy_two_agent_game();
  for (auto& a : g.spec.agents) {
    for (auto& W : a.W) W.setZero();
  }
  for (auto& W : g.spec.joint.W) W.setZero();
  g.spec.initial_covariance.setZero();
  for (auto& o : g.observation.agents) {
    for (auto& V : o.V) V.setZero();
  }
  const NashStrategy s = solve_feedback_nash(g.spec);
  const auto sched = compute_gain_schedule(g.spec, g.observation, s, {});
  const auto tr = simulate_run(g.spec, g.observation, s, sched, {}, 0);
  Vector x = g.spec.initial_mean;
  for (std::size_t t = 0; t <= g.spec.horizon; ++t) {
    EXPECT_LT((tr.state[t] - x).norm(), 1e-12);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_LT((tr.estimate[i][t] - tr.state[t]).norm(), 1e-12);
    }
    if (t == g.spec.horizon) break;
    const Vector u = -s.gain[t] * x - s.feedforward[t];
    x = g.spec.joint.A[t] * x + g.spec.joint.B[t] * u;
  }
}

TEST(Simulator, MonteCarloMatchesAnalyticCovariance) {
  const auto g = toy_two_agent_game(6);
  const NashStrategy s = solve_feedback_nash(g.spec);
  SimulationConfig cfg;
  cfg.policy = ConstantLambda{0.05};
  cfg.runs = 20000;
  cfg.seed = 17;
  const auto sched = compute_gain_schedule(g.spec, g.observation, s, cfg);
  const auto emp = accumulate_error_covariance(g.spec, g.observation, s, sched, cfg);
  for (std::size_t t = 0; t < emp.size(); ++t) {
    const Matrix& ref = sched.joint_posterior[t];
    EXPECT_LT((emp[t] - ref).norm() / ref.norm(), 0.05) << "t=" << t;
  }
}

TEST(Simulator, AdaptiveLambdaUsesPreviousGain) {
  Rng rng(501);
  const GameSpec spec = random_game(rng, 2, 4, 2, 1);
  const auto obs = full_state_observation(spec, 0.2);
  const NashStrategy s = solve_feedback_nash(spec);
  const AdaptiveLambda pol{1000.0, 250.0};
  std::vector<Eigen::Index> sizes{spec.agents[0].state_dim, spec.agents[1].state_dim};
  for (std::size_t t = 0; t <= spec.horizon; ++t) {
    const std::size_t src = t == 0 ? 0 : t - 1;
    const Vector expect = adaptive_lambda(agent_gain_rows(spec, s.gain[src], 1),
                                          1000.0, 250.0, sizes);
    EXPECT_EQ(lambdas_for(pol, spec, obs, s, t, 1), expect);
  }
}

TEST(Simulator, ConfigValidation) {
  SimulationConfig cfg;
  cfg.r_th = 0.0;
  EXPECT_THROW(cfg.validate(), InstanceError);
  cfg.r_th = 1.0;
  EXPECT_NO_THROW(cfg.validate());
  cfg.runs = 0;
  EXPECT_THROW(cfg.validate(), InstanceError);
  cfg.runs = 1;
  cfg.policy = ConstantLambda{-1.0};
  EXPECT_THROW(cfg.validate(), InstanceError);
}

TEST(Simulator, RealizedCostSumsStageCosts) {
  const auto g = toy_two_agent_game();
  const NashStrategy s = solve_feedback_nash(g.spec);
  const auto sched = compute_gain_schedule(g.spec, g.observation, s, {});
  const auto tr = simulate_run(g.spec, g.observation, s, sched, {}, 0);
  const auto cost = realized_cost(tr, g.spec);
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (const double c : tr.stage_cost[i]) sum += c;
    EXPECT_NEAR(cost[i], sum, 1e-12 * std::max(1.0, std::abs(sum)));
  }
}
