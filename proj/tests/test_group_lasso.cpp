#include "sparse_lqg/errors.hpp"
#include "sparse_lqg/estimation.hpp"
#include "sparse_lqg/group_lasso.hpp"
#include "sparse_lqg/instances.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sparse_lqg;

namespace {

GroupLassoProblem scalar_problem(double m, double s, double lambda) {
  GroupLassoProblem p;
  p.M = Matrix::Constant(1, 1, m);
  p.S = Matrix::Constant(1, 1, s);
  p.lambdas = Vector::Constant(1, lambda);
  p.groups = {1};
  return p;
}

}  // namespace

TEST(GroupLasso, ZeroLambdaRecoversOptimalGain) {
  Rng rng(401);
  for (int k = 0; k < 50; ++k) {
    const auto inst = random_estimation_instance(rng, 16, false);
    const auto problem = to_problem(
        inst, Vector::Zero(static_cast<Eigen::Index>(inst.groups.size())));
    const auto sol = solve_group_lasso(problem);
    const Matrix ref = optimal_gain(inst.prior, inst.C, inst.V);
    EXPECT_LE((sol.K - ref).norm() / ref.norm(), 1e-8);
  }
}

TEST(GroupLasso, ScalarSoftThreshold) {
  const double cases[][3] = {{1.0, 1.0, 0.5},  {2.0, -0.7, 1.0}, {0.3, 2.0, 0.1},
                             {1.5, 0.2, 0.6},  {1.5, 0.2, 0.61}, {4.0, -3.0, 0.0},
                             {0.5, 0.25, 0.25}};
  for (const auto& c : cases) {
    const double m = c[0], s = c[1], lam = c[2];
    const auto sol = solve_group_lasso(scalar_problem(m, s, lam));
    const double expect = sparse_lqg::testing::scalar_soft_threshold(m, s, lam);
    EXPECT_NEAR(sol.K(0, 0), expect, 1e-10) << m << " " << s << " " << lam;
  }
}

TEST(GroupLasso, SingleColumnGroupShrinksRadially) {
  // One p = 1 group with n rows: K = (S/m) max(0, 1 − λ / (2m‖S‖)).
  GroupLassoProblem p;
  p.M = Matrix::Constant(1, 1, 1.7);
  p.S = (Matrix(3, 1) << 0.4, -1.2, 0.9).finished();
  p.groups = {1};
  for (const double lam : {0.0, 0.5, 2.0, 5.0, 10.0}) {
    p.lambdas = Vector::Constant(1, lam);
    const auto sol = solve_group_lasso(p);
    const double shrink = std::max(0.0, 1.0 - lam / (2.0 * 1.7 * p.S.norm()));
    EXPECT_LT((sol.K - p.S / 1.7 * shrink).norm(), 1e-10) << lam;
  }
}

TEST(GroupLasso, KktOnRandomInstances) {
  Rng rng(402);
  for (int k = 0; k < 100; ++k) {
    const auto inst = random_estimation_instance(rng, 12, k % 2 == 0);
    auto problem = to_problem(
        inst, Vector::Zero(static_cast<Eigen::Index>(inst.groups.size())));
    problem.lambdas = random_lambdas(rng, problem);
    const auto sol = solve_group_lasso(problem);
    EXPECT_LE(kkt_residual(problem, sol.K).max, 1e-6);
    EXPECT_DOUBLE_EQ(sol.kkt, kkt_residual(problem, sol.K).max);
  }
}

TEST(GroupLasso, ZeroThresholdIsExact) {
  Rng rng(403);
  const auto inst = random_estimation_instance(rng, 8, false);
  auto problem = to_problem(
      inst, Vector::Zero(static_cast<Eigen::Index>(inst.groups.size())));
  const auto zero = zero_thresholds(problem);
  for (std::size_t g = 0; g < zero.size(); ++g) {
    problem.lambdas(static_cast<Eigen::Index>(g)) = zero[g] * (1.0 + 1e-9);
  }
  EXPECT_EQ(solve_group_lasso(problem).K, Matrix::Zero(problem.rows(), problem.cols()));
  problem.lambdas *= 0.9;
  EXPECT_GT(solve_group_lasso(problem).K.norm(), 0.0);
}

TEST(GroupLasso, ConicFormAgreesWithObjective) {
  Rng rng(404);
  for (int k = 0; k < 30; ++k) {
    const auto inst = random_estimation_instance(rng, 8, false);
    auto problem = to_problem(
        inst, Vector::Zero(static_cast<Eigen::Index>(inst.groups.size())));
    problem.lambdas = random_lambdas(rng, problem);
    const auto sol = solve_group_lasso(problem);
    const auto cone = vectorize_to_cone(problem);
    const Vector x = cone.lift(sol.K);
    const double f = objective(problem, sol.K);
    EXPECT_LE(std::abs(cone.objective(x) - f), 1e-10 * std::max(1.0, std::abs(f)));
    EXPECT_EQ(cone.cone_violation(x), 0.0);
    EXPECT_EQ(cone.num_variables(),
              problem.rows() * problem.cols() +
                  static_cast<Eigen::Index>(problem.num_groups()));
  }
}

TEST(GroupLasso, ConeLayoutIsContiguousPerGroup) {
  GroupLassoProblem p;
  p.M = Matrix::Identity(3, 3);
  p.S = Matrix::Ones(2, 3);
  p.lambdas = Vector::Ones(2);
  p.groups = {1, 2};
  const auto cone = vectorize_to_cone(p);
  ASSERT_EQ(cone.cones.size(), 2u);
  EXPECT_EQ(cone.cones[0].begin, 0);
  EXPECT_EQ(cone.cones[0].size, 2);
  EXPECT_EQ(cone.cones[1].begin, 2);
  EXPECT_EQ(cone.cones[1].size, 4);
  EXPECT_EQ(cone.cones[1].slack, 7);
  // Slack below the group norm is infeasible.
  Vector x = cone.lift(Matrix::Ones(2, 3));
  x(7) -= 0.5;
  EXPECT_NEAR(cone.cone_violation(x), 0.5, 1e-15);
}

TEST(GroupLasso, SoftThresholdOperator) {
  const Matrix b = (Matrix(2, 1) << 3.0, 4.0).finished();
  EXPECT_EQ(group_soft_threshold(b, 5.0), Matrix::Zero(2, 1));
  EXPECT_EQ(group_soft_threshold(b, 7.0), Matrix::Zero(2, 1));
  EXPECT_LT((group_soft_threshold(b, 1.0) - 0.8 * b).norm(), 1e-15);
}

TEST(GroupLasso, IterationCapRaises) {
  Rng rng(405);
  const auto inst = random_estimation_instance(rng, 10, false);
  auto problem = to_problem(
      inst, Vector::Zero(static_cast<Eigen::Index>(inst.groups.size())));
  problem.lambdas = random_lambdas(rng, problem);
  SolverSettings s;
  s.max_iterations = 2;
  s.polish = false;
  s.kkt_tolerance = 1e-14;
  EXPECT_THROW(solve_group_lasso(problem, s), ConvergenceError);
}

TEST(GroupLasso, RejectsBadInput) {
  EXPECT_THROW(assemble_problem(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                Matrix::Identity(2, 2), Vector::Constant(1, -1.0),
                                {2}),
               InstanceError);
  EXPECT_THROW(assemble_problem(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                Matrix::Identity(2, 2), Vector::Ones(2), {1, 2}),
               InstanceError);
  EXPECT_THROW(assemble_problem(Matrix::Identity(2, 2), Matrix::Identity(3, 3),
                                Matrix::Identity(3, 3), Vector::Ones(1), {3}),
               InstanceError);
}

TEST(ResetRule, ThresholdsPerGroup) {
  Matrix ref(1, 3);
  ref << 1.0, 2.0, 0.0;
  Matrix pre(1, 3);
  pre << 0.6, 0.9, 0.0;
  const std::vector<Eigen::Index> groups{1, 1, 1};
  const auto d = apply_reset_rule(pre, ref, 0.5, groups);
  EXPECT_EQ(d.active, (std::vector<bool>{true, false, true}));
  EXPECT_EQ(d.final_gain(0, 0), 1.0);
  EXPECT_EQ(d.final_gain(0, 1), 0.0);
  EXPECT_EQ(d.active_count(), 2u);
}

TEST(ResetRule, RatioOneKeepsExactMatches) {
  Rng rng(406);
  const Matrix ref = random_gaussian(rng, 3, 4);
  const std::vector<Eigen::Index> groups{2, 2};
  const Matrix pre = ref * (1.0 - 1e-12);
  const auto d = apply_reset_rule(pre, ref, 1.0, groups);
  EXPECT_EQ(d.final_gain, ref);
  EXPECT_THROW(apply_reset_rule(pre, ref, 0.0, groups), InstanceError);
  EXPECT_THROW(apply_reset_rule(pre, ref, 1.5, groups), InstanceError);
}

TEST(AdaptiveLambda, InverseBlockNorms) {
  Matrix gain = Matrix::Zero(2, 5);
  gain.block(0, 0, 2, 2) = Matrix::Constant(2, 2, 0.5);  // norm 1
  gain.block(0, 2, 2, 1) = Matrix::Constant(2, 1, 2.0);  // norm 2√2
  const std::vector<Eigen::Index> sizes{2, 1, 2};
  const Vector lam = adaptive_lambda(gain, 1000.0, 250.0, sizes);
  EXPECT_NEAR(lam(0), 1000.0, 1e-12);
  EXPECT_NEAR(lam(1), 1000.0 / std::sqrt(8.0), 1e-10);
  EXPECT_EQ(lam(2), 250.0);
  EXPECT_THROW(adaptive_lambda(gain, 0.0, 1.0, sizes), InstanceError);
  const std::vector<Eigen::Index> wrong{2, 2};
  EXPECT_THROW(adaptive_lambda(gain, 1.0, 1.0, wrong), InstanceError);
}

TEST(ResetBound, BoundFormula) {
  const Matrix prior = Vector::LinSpaced(3, 1.0, 3.0).asDiagonal();
  const Matrix V = 0.5 * Matrix::Identity(3, 3);
  const double expect = 2.0 * 0.5 / std::sqrt(3.0) * 1.0 * 1.5 * 1.5 / 3.5;
  EXPECT_NEAR(theorem1_bound(prior, V, 0.5, 3), expect, 1e-14);
  EXPECT_EQ(theorem1_bound(prior, V, 1.0, 3), 0.0);
  Matrix singular = prior;
  singular(0, 0) = 0.0;
  EXPECT_EQ(theorem1_bound(singular, V, 0.5, 3), 0.0);
}

TEST(ResetBound, GroupsResetBelowBound) {
  const auto report = run_theorem1_suite(407, 60);
  EXPECT_EQ(report.instances, 60u);
  EXPECT_GT(report.hypothesis, 0u);
  EXPECT_TRUE(report.all_reset());
  EXPECT_LE(report.max_kkt, 1e-6);
}
