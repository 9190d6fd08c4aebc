#include "sparse_lqg/instances.hpp"

#include <algorithm>
#include <cmath>

namespace sparse_lqg {

Matrix random_gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  }
  return m;
}

Matrix random_spd(Rng& rng, Eigen::Index n, double lo, double hi) {
  const Eigen::HouseholderQR<Matrix> qr(random_gaussian(rng, n, n));
  const Matrix U = qr.householderQ();
  std::uniform_real_distribution<double> eig(lo, hi);
  Vector d(n);
  for (Eigen::Index k = 0; k < n; ++k) d(k) = eig(rng);
  return symmetrized(U * d.asDiagonal() * U.transpose());
}

std::vector<Eigen::Index> random_partition(Rng& rng, Eigen::Index total,
                                           std::size_t parts) {
  std::vector<Eigen::Index> sizes(parts, 1);
  std::uniform_int_distribution<std::size_t> pick(0, parts - 1);
  for (Eigen::Index k = static_cast<Eigen::Index>(parts); k < total; ++k) {
    ++sizes[pick(rng)];
  }
  return sizes;
}

EstimationInstance random_estimation_instance(Rng& rng, Eigen::Index max_dim,
                                              bool interagent) {
  std::uniform_int_distribution<Eigen::Index> dim(2, max_dim);
  std::uniform_real_distribution<double> scale(-2.0, 1.0);
  EstimationInstance inst;
  const Eigen::Index n = dim(rng);
  const Eigen::Index p = interagent ? n : dim(rng);
  const double s = std::pow(10.0, scale(rng));
  inst.prior = s * random_spd(rng, n, 0.05, 5.0);
  inst.C = interagent ? Matrix::Identity(n, n) : random_gaussian(rng, p, n);
  inst.V = random_spd(rng, p, 0.05 * s, 2.0 * s);
  std::uniform_int_distribution<std::size_t> parts(1, static_cast<std::size_t>(p));
  inst.groups = random_partition(rng, p, parts(rng));
  return inst;
}

GroupLassoProblem to_problem(const EstimationInstance& inst, Vector lambdas) {
  return assemble_problem(inst.prior, inst.C, inst.V, std::move(lambdas),
                          inst.groups);
}

Vector random_lambdas(Rng& rng, const GroupLassoProblem& problem) {
  const auto zero = zero_thresholds(problem);
  std::uniform_real_distribution<double> factor(-1.5, 0.5);
  Vector out(static_cast<Eigen::Index>(zero.size()));
  for (std::size_t g = 0; g < zero.size(); ++g) {
    out(static_cast<Eigen::Index>(g)) = zero[g] * std::pow(10.0, factor(rng));
  }
  return out;
}

GameSpec random_game(Rng& rng, std::size_t agents, std::size_t horizon,
                     Eigen::Index max_state, Eigen::Index max_control) {
  std::uniform_int_distribution<Eigen::Index> nd(1, max_state);
  std::uniform_int_distribution<Eigen::Index> md(1, max_control);
  std::vector<AgentDynamics> dyn;
  for (std::size_t i = 0; i < agents; ++i) {
    const Eigen::Index n = nd(rng);
    const Eigen::Index m = md(rng);
    AgentDynamics a;
    a.state_dim = n;
    a.control_dim = m;
    for (std::size_t t = 0; t < horizon; ++t) {
      Matrix A = random_gaussian(rng, n, n);
      const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
      A *= 1.1 / std::max(rho, 1e-3);
      a.A.push_back(A);
      a.B.push_back(random_gaussian(rng, n, m));
      a.W.push_back(random_spd(rng, n, 0.01, 0.5));
    }
    dyn.push_back(std::move(a));
  }
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::vector<Eigen::Index> control_offsets;
  for (const auto& a : dyn) {
    control_offsets.push_back(m);
    n += a.state_dim;
    m += a.control_dim;
  }
  std::vector<AgentCost> costs(agents);
  for (std::size_t i = 0; i < agents; ++i) {
    auto& c = costs[i];
    for (std::size_t t = 0; t <= horizon; ++t) {
      const Matrix G = random_gaussian(rng, n, n);
      c.Q.push_back(symmetrized(G.transpose() * G / static_cast<double>(n)));
      c.q.push_back(random_gaussian(rng, n, 1));
    }
    for (std::size_t t = 0; t < horizon; ++t) {
      Matrix R = Matrix::Zero(m, m);
      R.block(control_offsets[i], control_offsets[i], dyn[i].control_dim,
              dyn[i].control_dim) = random_spd(rng, dyn[i].control_dim, 0.5, 2.0);
      c.R.push_back(R);
      c.r.push_back(random_gaussian(rng, m, 1));
    }
  }
  return make_game(std::move(dyn), horizon, std::move(costs),
                   random_gaussian(rng, n, 1), random_spd(rng, n, 0.1, 1.0));
}

ObservationModel full_state_observation(const GameSpec& spec, double noise_std) {
  const Eigen::Index n = spec.state_dim();
  std::vector<Eigen::Index> groups;
  for (const auto& a : spec.agents) groups.push_back(a.state_dim);
  ObservationModel obs;
  for (std::size_t i = 0; i < spec.num_agents(); ++i) {
    obs.agents.push_back(AgentObservation::constant(
        Matrix::Identity(n, n),
        noise_std * noise_std * Matrix::Identity(n, n), groups, spec.horizon));
  }
  obs.validate(spec);
  return obs;
}

Theorem1SuiteReport run_theorem1_suite(std::uint64_t seed, std::size_t count,
                                       const SolverSettings& settings) {
  Rng rng(seed);
  std::uniform_real_distribution<double> rth(0.05, 0.95);
  Theorem1SuiteReport report;
  for (std::size_t k = 0; k < count; ++k) {
    const auto inst = random_estimation_instance(rng, 12, true);
    const double r_th = rth(rng);
    const double bound =
        theorem1_bound(inst.prior, inst.V, r_th, inst.groups.size());
    ++report.instances;
    if (!(bound > 0.0)) {
      ++report.vacuous;
      continue;
    }
    ++report.hypothesis;
    const auto problem = to_problem(
        inst, Vector::Constant(static_cast<Eigen::Index>(inst.groups.size()),
                               0.99 * bound));
    const auto sol = solve_group_lasso(problem, settings);
    report.max_kkt = std::max(report.max_kkt, sol.kkt);
    const Matrix reference = optimal_gain(inst.prior, inst.C, inst.V);
    const auto decision = apply_reset_rule(sol.K, reference, r_th, inst.groups);
    report.groups += inst.groups.size();
    report.resets += decision.active_count();
  }
  return report;
}

}  // namespace sparse_lqg
