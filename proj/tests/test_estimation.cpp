#include "sparse_lqg/errors.hpp"
#include "sparse_lqg/estimation.hpp"
#include "sparse_lqg/instances.hpp"

#include <gtest/gtest.h>

using namespace sparse_lqg;

TEST(Estimation, OptimalGainMatchesFormula) {
  Rng rng(301);
  for (int k = 0; k < 20; ++k) {
    const auto inst = random_estimation_instance(rng, 8, false);
    const Matrix K = optimal_gain(inst.prior, inst.C, inst.V);
    const Matrix M = innovation_covariance(inst.prior, inst.C, inst.V);
    const Matrix ref = inst.prior * inst.C.transpose() * M.inverse();
    EXPECT_LT((K - ref).norm() / ref.norm(), 1e-10);
  }
}

TEST(Estimation, JosephEqualsShortFormAtOptimalGain) {
  Rng rng(302);
  for (int k = 0; k < 20; ++k) {
    const auto inst = random_estimation_instance(rng, 8, false);
    const Matrix K = optimal_gain(inst.prior, inst.C, inst.V);
    const Matrix joseph = joseph_update(inst.prior, K, inst.C, inst.V);
    const Eigen::Index n = inst.prior.rows();
    const Matrix short_form = (Matrix::Identity(n, n) - K * inst.C) * inst.prior;
    EXPECT_LT((joseph - short_form).norm() / inst.prior.norm(), 1e-9);
    EXPECT_GE(min_eigenvalue(joseph), -1e-12 * inst.prior.norm());
  }
}

TEST(Estimation, JosephStaysPsdForAnyGain) {
  Rng rng(303);
  const auto inst = random_estimation_instance(rng, 6, false);
  const Matrix K = 3.0 * random_gaussian(rng, inst.prior.rows(), inst.C.rows());
  const Matrix post = joseph_update(inst.prior, K, inst.C, inst.V);
  EXPECT_GE(min_eigenvalue(post), -1e-10 * post.norm());
  EXPECT_EQ(post, post.transpose());
}

TEST(Estimation, ZeroGainLeavesPrior) {
  Rng rng(304);
  const auto inst = random_estimation_instance(rng, 6, false);
  const Matrix K = Matrix::Zero(inst.prior.rows(), inst.C.rows());
  EXPECT_LT((joseph_update(inst.prior, K, inst.C, inst.V) - inst.prior).norm(),
            1e-14 * inst.prior.norm());
}

TEST(Estimation, DegenerateInnovationRaises) {
  // Two identical noiseless readings of one state.
  EXPECT_THROW(optimal_gain(Matrix::Ones(1, 1), Matrix::Ones(2, 1),
                            Matrix::Zero(2, 2)),
               DegenerateInnovationError);
}

TEST(Estimation, NoUncertaintyGivesZeroGain) {
  EXPECT_EQ(optimal_gain(Matrix::Zero(2, 2), Matrix::Identity(2, 2),
                         Matrix::Zero(2, 2)),
            Matrix::Zero(2, 2));
}

TEST(Estimation, JointPriorAndCoupling) {
  Rng rng(305);
  const GameSpec spec = random_game(rng, 3, 4, 2, 2);
  const NashStrategy s = solve_feedback_nash(spec);
  const Eigen::Index n = spec.state_dim();

  const Matrix prior = initial_joint_prior(spec);
  ASSERT_EQ(prior.rows(), 3 * n);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(extract_agent_block(prior, i, n), spec.initial_covariance);
  }

  const auto cm = build_coupling_matrices(spec, s, 1);
  const Matrix closed = spec.joint.A[1] - spec.joint.B[1] * s.gain[1];
  for (std::size_t i = 0; i < 3; ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i) * n;
    EXPECT_LT((cm.closed_loop.block(r, r, n, n) - closed).norm(), 1e-14);
    EXPECT_EQ(cm.mixing.block(r, 0, n, 3 * n), cm.mixing.topRows(n));
  }
  // Row-block sum of ℬ is B Γ, the full-information closed-loop correction.
  Matrix sum = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < 3; ++j) {
    sum += cm.mixing.block(0, static_cast<Eigen::Index>(j) * n, n, n);
  }
  EXPECT_LT((sum - spec.joint.B[1] * s.gain[1]).norm(), 1e-12);
}

TEST(Estimation, PriorPropagationAddsSharedNoise) {
  Rng rng(306);
  const GameSpec spec = random_game(rng, 2, 3, 2, 1);
  const NashStrategy s = solve_feedback_nash(spec);
  const Eigen::Index n = spec.state_dim();
  const auto cm = build_coupling_matrices(spec, s, 0);
  const Matrix zero = Matrix::Zero(2 * n, 2 * n);
  const Matrix next = propagate_prior_covariance(zero, cm, spec.joint.W[0], 2);
  EXPECT_EQ(next, tile(spec.joint.W[0], 2));
}

TEST(Estimation, JointUpdateMatchesPerAgentJoseph) {
  Rng rng(307);
  const GameSpec spec = random_game(rng, 2, 2, 2, 1);
  const ObservationModel obs = full_state_observation(spec, 0.3);
  const Eigen::Index n = spec.state_dim();
  const Matrix prior = tile(random_spd(rng, n, 0.5, 2.0), 2) +
                       block_diag(std::vector<Matrix>{random_spd(rng, n, 0.1, 0.2),
                                                      random_spd(rng, n, 0.1, 0.2)});
  std::vector<Matrix> gains;
  for (std::size_t i = 0; i < 2; ++i) {
    gains.push_back(optimal_gain(extract_agent_block(prior, i, n),
                                 obs.agents[i].C[0], obs.agents[i].V[0]));
  }
  const Matrix post = posterior_covariance_update(prior, gains, obs, 0);
  for (std::size_t i = 0; i < 2; ++i) {
    const Matrix own = joseph_update(extract_agent_block(prior, i, n), gains[i],
                                     obs.agents[i].C[0], obs.agents[i].V[0]);
    EXPECT_LT((extract_agent_block(post, i, n) - own).norm(), 1e-12);
  }
}

TEST(Estimation, ObservationValidation) {
  Rng rng(308);
  const GameSpec spec = random_game(rng, 2, 2, 2, 1);
  ObservationModel obs = full_state_observation(spec, 0.3);
  EXPECT_NO_THROW(obs.validate(spec));
  auto bad = obs;
  bad.agents[0].groups.back() += 1;
  EXPECT_THROW(bad.validate(spec), InstanceError);
  bad = obs;
  bad.agents[1].V[1](0, 0) = -1.0;
  EXPECT_THROW(bad.validate(spec), InstanceError);
  bad = obs;
  bad.agents.pop_back();
  EXPECT_THROW(bad.validate(spec), InstanceError);
}

TEST(Estimation, EstimateRecursions) {
  const Matrix A = Matrix::Identity(2, 2) * 2.0;
  const Matrix B = Matrix::Ones(2, 1);
  const Vector xp = predict_estimate(Vector::Ones(2), Vector::Constant(1, 3.0), A, B);
  EXPECT_EQ(xp, Vector::Constant(2, 5.0));
  const Matrix K = Matrix::Identity(2, 2) * 0.5;
  const Vector xc = correct_estimate(xp, Vector::Constant(2, 7.0), K,
                                     Matrix::Identity(2, 2));
  EXPECT_EQ(xc, Vector::Constant(2, 6.0));
  const Vector u = estimated_joint_control(Vector::Ones(2), Matrix::Ones(1, 2),
                                           Vector::Constant(1, 0.5));
  EXPECT_EQ(u(0), -2.5);
}
