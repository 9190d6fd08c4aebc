#include "sparse_lqg/simulator.hpp"

#include "sparse_lqg/errors.hpp"
#include "sparse_lqg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace sparse_lqg {
namespace {

bool is_identity(const Matrix& C) {
  return C.rows() == C.cols() &&
         C.isApprox(Matrix::Identity(C.rows(), C.cols()), 0.0);
}

std::vector<Eigen::Index> agent_state_sizes(const GameSpec& spec) {
  std::vector<Eigen::Index> sizes;
  for (const auto& a : spec.agents) sizes.push_back(a.state_dim);
  return sizes;
}

AgentStep solve_agent_step(const GameSpec& spec, const ObservationModel& obs,
                           const NashStrategy& strategy,
                           const SimulationConfig& config,
                           const Matrix& joint_prior, std::size_t t,
                           std::size_t agent) {
  const auto n = spec.state_dim();
  const auto& ob = obs.agents[agent];
  const Matrix& C = ob.C[t];
  const Matrix& V = ob.V[t];

  AgentStep step;
  step.prior = extract_agent_block(joint_prior, agent, n);
  step.lambdas = lambdas_for(config.policy, spec, obs, strategy, t, agent);
  step.optimal = optimal_gain(step.prior, C, V);

  const GroupLassoProblem problem =
      assemble_problem(step.prior, C, V, step.lambdas, ob.groups);
  GroupLassoSolution sol;
  try {
    sol = solve_group_lasso(problem, config.solver);
  } catch (const ConvergenceError& e) {
    throw e.annotated(t, agent);
  }
  step.kkt = sol.kkt;
  step.iterations = sol.iterations;

  const ConicProgramData cone = vectorize_to_cone(problem);
  const double f = objective(problem, sol.K);
  step.conic_gap =
      std::abs(cone.objective(cone.lift(sol.K)) - f) / std::max(1.0, std::abs(f));

  const GainDecision decision =
      apply_reset_rule(sol.K, step.optimal, config.r_th, ob.groups);
  step.pre_threshold = std::move(sol.K);
  step.gain = decision.final_gain;
  step.active = decision.active;

  step.interagent = is_identity(C);
  if (step.interagent) {
    step.theorem_bound =
        theorem1_bound(step.prior, V, config.r_th, ob.groups.size());
    step.theorem_hypothesis = step.theorem_bound > 0.0 &&
                              step.lambdas.maxCoeff() <= step.theorem_bound;
    step.theorem_violated =
        step.theorem_hypothesis && decision.active_count() != ob.groups.size();
  }
  return step;
}

GainSchedule schedule_impl(const GameSpec& spec, const ObservationModel& obs,
                           const NashStrategy& strategy,
                           const SimulationConfig& config, bool parallel) {
  config.validate();
  obs.validate(spec);
  const std::size_t N = spec.num_agents();
  const std::size_t T = spec.horizon;
  const auto n = spec.state_dim();
  if (strategy.horizon() != T) {
    throw InstanceError("strategy horizon does not match game");
  }

  GainSchedule schedule;
  schedule.steps.resize(T + 1);
  schedule.joint_prior.reserve(T + 1);
  schedule.joint_posterior.reserve(T + 1);

  Matrix prior = initial_joint_prior(spec);
  for (std::size_t t = 0; t <= T; ++t) {
    auto& row = schedule.steps[t];
    row.resize(N);
    std::vector<std::exception_ptr> failures(N);
    const auto count = static_cast<long>(N);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long k = 0; k < count; ++k) {
      const auto i = static_cast<std::size_t>(k);
      try {
        row[i] = solve_agent_step(spec, obs, strategy, config, prior, t, i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }

    std::vector<Matrix> gains(N);
    for (std::size_t i = 0; i < N; ++i) gains[i] = row[i].gain;
    Matrix posterior = posterior_covariance_update(prior, gains, obs, t);
    for (std::size_t i = 0; i < N; ++i) {
      row[i].posterior = extract_agent_block(posterior, i, n);
    }
    schedule.joint_prior.push_back(prior);
    schedule.joint_posterior.push_back(posterior);

    if (t < T) {
      const CouplingMatrices coupling =
          build_coupling_matrices(spec, strategy, t);
      prior = propagate_prior_covariance(posterior, coupling,
                                         spec.joint.W[t], N);
    }
  }
  return schedule;
}

// Samplers shared by all runs of one invocation.
struct RolloutContext {
  GaussianSampler initial;
  std::vector<GaussianSampler> process;                  // [t]
  std::vector<std::vector<GaussianSampler>> measurement; // [t][agent]
};

RolloutContext make_context(const GameSpec& spec, const ObservationModel& obs) {
  RolloutContext ctx;
  ctx.initial = GaussianSampler(spec.initial_covariance);
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    ctx.process.emplace_back(spec.joint.W[t]);
  }
  ctx.measurement.resize(spec.horizon + 1);
  for (std::size_t t = 0; t <= spec.horizon; ++t) {
    for (const auto& a : obs.agents) ctx.measurement[t].emplace_back(a.V[t]);
  }
  return ctx;
}

SimulationTrace rollout(const GameSpec& spec, const ObservationModel& obs,
                        const NashStrategy& strategy,
                        const GainSchedule& schedule,
                        const SimulationConfig& config,
                        const RolloutContext& ctx, std::size_t run_index) {
  const std::size_t N = spec.num_agents();
  const std::size_t T = spec.horizon;
  const auto m = spec.control_dim();
  const std::uint64_t seed = config.seed;

  SimulationTrace tr;
  tr.run = run_index;
  tr.state.reserve(T + 1);
  tr.control.reserve(T);
  tr.estimate.assign(N, {});
  tr.prior_estimate.assign(N, {});
  tr.estimated_control.assign(N, {});
  tr.observation.assign(N, {});
  tr.error_norm.assign(N, {});
  tr.stage_cost.assign(N, {});
  tr.sensor_active.resize(T + 1);

  Vector x = spec.initial_mean +
             ctx.initial.draw(stream_key(seed, run_index, 0,
                                         NoiseKind::kInitialState));
  std::vector<Vector> prior_est(N, spec.initial_mean);
  std::vector<Vector> est(N);
  std::vector<Vector> uhat(N);

  for (std::size_t t = 0;; ++t) {
    tr.state.push_back(x);
    tr.sensor_active[t].resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      const Matrix& C = obs.agents[i].C[t];
      const Vector y =
          C * x + ctx.measurement[t][i].draw(stream_key(
                      seed, run_index, t, NoiseKind::kObservation, i));
      est[i] = correct_estimate(prior_est[i], y, schedule.steps[t][i].gain, C);
      tr.observation[i].push_back(y);
      tr.prior_estimate[i].push_back(prior_est[i]);
      tr.estimate[i].push_back(est[i]);
      tr.error_norm[i].push_back((x - est[i]).norm());
      tr.sensor_active[t][i] = schedule.steps[t][i].active;
    }
    if (t == T) {
      for (std::size_t i = 0; i < N; ++i) {
        tr.stage_cost[i].push_back(stage_cost(spec, i, t, x, Vector()));
      }
      break;
    }

    Vector u(m);
    for (std::size_t i = 0; i < N; ++i) {
      uhat[i] = estimated_joint_control(est[i], strategy.gain[t],
                                        strategy.feedforward[t]);
      const auto oi = spec.control_offset(i);
      const auto mi = spec.agents[i].control_dim;
      u.segment(oi, mi) = uhat[i].segment(oi, mi);
      tr.estimated_control[i].push_back(uhat[i]);
    }
    tr.control.push_back(u);
    for (std::size_t i = 0; i < N; ++i) {
      tr.stage_cost[i].push_back(stage_cost(spec, i, t, x, u));
    }

    const Vector w =
        ctx.process[t].draw(stream_key(seed, run_index, t, NoiseKind::kProcess));
    x = spec.joint.A[t] * x + spec.joint.B[t] * u + w;
    for (std::size_t i = 0; i < N; ++i) {
      prior_est[i] =
          predict_estimate(est[i], uhat[i], spec.joint.A[t], spec.joint.B[t]);
    }
  }
  return tr;
}

void check_schedule(const GameSpec& spec, const GainSchedule& schedule) {
  if (schedule.num_steps() != spec.horizon + 1) {
    throw InstanceError("gain schedule does not match the game horizon");
  }
}

std::vector<SimulationTrace> run_impl(const GameSpec& spec,
                                      const ObservationModel& obs,
                                      const NashStrategy& strategy,
                                      const GainSchedule& schedule,
                                      const SimulationConfig& config,
                                      bool parallel) {
  config.validate();
  check_schedule(spec, schedule);
  const RolloutContext ctx = make_context(spec, obs);
  std::vector<SimulationTrace> traces(config.runs);
  const auto count = static_cast<long>(config.runs);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long r = 0; r < count; ++r) {
    const auto k = static_cast<std::size_t>(r);
    traces[k] = rollout(spec, obs, strategy, schedule, config, ctx, k);
  }
  return traces;
}

constexpr std::size_t kMomentChunk = 256;

MatrixSeq error_covariance_impl(const GameSpec& spec,
                                const ObservationModel& obs,
                                const NashStrategy& strategy,
                                const GainSchedule& schedule,
                                const SimulationConfig& config, bool parallel) {
  config.validate();
  check_schedule(spec, schedule);
  const RolloutContext ctx = make_context(spec, obs);
  const std::size_t steps = spec.horizon + 1;
  const auto dim = spec.state_dim() * static_cast<Eigen::Index>(spec.num_agents());
  const std::size_t chunks = (config.runs + kMomentChunk - 1) / kMomentChunk;

  struct Partial {
    MatrixSeq second;
    VectorSeq first;
  };
  std::vector<Partial> partial(chunks);
  const auto count = static_cast<long>(chunks);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long c = 0; c < count; ++c) {
    auto& p = partial[static_cast<std::size_t>(c)];
    p.second.assign(steps, Matrix::Zero(dim, dim));
    p.first.assign(steps, Vector::Zero(dim));
    const std::size_t begin = static_cast<std::size_t>(c) * kMomentChunk;
    const std::size_t end = std::min(config.runs, begin + kMomentChunk);
    for (std::size_t r = begin; r < end; ++r) {
      const SimulationTrace tr =
          rollout(spec, obs, strategy, schedule, config, ctx, r);
      for (std::size_t t = 0; t < steps; ++t) {
        const Vector e = tr.joint_error(t);
        p.first[t] += e;
        p.second[t].noalias() += e * e.transpose();
      }
    }
  }

  MatrixSeq cov(steps, Matrix::Zero(dim, dim));
  VectorSeq mean(steps, Vector::Zero(dim));
  for (const auto& p : partial) {
    for (std::size_t t = 0; t < steps; ++t) {
      cov[t] += p.second[t];
      mean[t] += p.first[t];
    }
  }
  const double runs = static_cast<double>(config.runs);
  for (std::size_t t = 0; t < steps; ++t) {
    mean[t] /= runs;
    cov[t] = (cov[t] - runs * mean[t] * mean[t].transpose()) /
             std::max(1.0, runs - 1.0);
  }
  return cov;
}

}  // namespace

std::string describe(const RegularizationPolicy& policy) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantLambda>) {
          os << p.lambda;
        } else if constexpr (std::is_same_v<P, AdaptiveLambda>) {
          os << "adaptive:" << p.L1 << ":" << p.L2;
        } else {
          os << "per-group";
        }
      },
      policy);
  return os.str();
}

void SimulationConfig::validate() const {
  if (!(r_th > 0.0 && r_th <= 1.0)) {
    throw InstanceError("r_th must lie in (0, 1]");
  }
  if (runs < 1) throw InstanceError("at least one run required");
  if (const auto* c = std::get_if<ConstantLambda>(&policy)) {
    if (!(c->lambda >= 0.0)) throw InstanceError("λ must be nonnegative");
  }
  if (const auto* a = std::get_if<AdaptiveLambda>(&policy)) {
    if (!(a->L1 > 0.0 && a->L2 > 0.0)) {
      throw InstanceError("adaptive λ needs L1, L2 > 0");
    }
  }
}

Vector lambdas_for(const RegularizationPolicy& policy, const GameSpec& spec,
                   const ObservationModel& obs, const NashStrategy& strategy,
                   std::size_t t, std::size_t agent) {
  const auto groups = static_cast<Eigen::Index>(obs.agents[agent].groups.size());
  if (const auto* c = std::get_if<ConstantLambda>(&policy)) {
    return Vector::Constant(groups, c->lambda);
  }
  if (const auto* g = std::get_if<PerGroupLambda>(&policy)) {
    if (g->lambdas.size() != obs.num_agents() ||
        g->lambdas[agent].size() != groups) {
      throw InstanceError("per-group λ: need one entry per group of agent " +
                          std::to_string(agent));
    }
    return g->lambdas[agent];
  }
  const auto& a = std::get<AdaptiveLambda>(policy);
  const auto sizes = agent_state_sizes(spec);
  if (static_cast<Eigen::Index>(sizes.size()) != groups) {
    throw InstanceError(
        "adaptive λ requires one sensor group per observed agent");
  }
  const std::size_t gain_step = t == 0 ? 0 : std::min(t - 1, spec.horizon - 1);
  return adaptive_lambda(agent_gain_rows(spec, strategy.gain[gain_step], agent),
                         a.L1, a.L2, sizes);
}

GainSchedule compute_gain_schedule(const GameSpec& spec,
                                   const ObservationModel& obs,
                                   const NashStrategy& strategy,
                                   const SimulationConfig& config) {
  return schedule_impl(spec, obs, strategy, config, true);
}

GainSchedule compute_gain_schedule_serial(const GameSpec& spec,
                                          const ObservationModel& obs,
                                          const NashStrategy& strategy,
                                          const SimulationConfig& config) {
  return schedule_impl(spec, obs, strategy, config, false);
}

Vector SimulationTrace::joint_error(std::size_t t) const {
  const std::size_t N = estimate.size();
  const auto n = state[t].size();
  Vector e(n * static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) {
    e.segment(static_cast<Eigen::Index>(i) * n, n) = state[t] - estimate[i][t];
  }
  return e;
}

SimulationTrace simulate_run(const GameSpec& spec, const ObservationModel& obs,
                             const NashStrategy& strategy,
                             const GainSchedule& schedule,
                             const SimulationConfig& config,
                             std::size_t run_index) {
  check_schedule(spec, schedule);
  return rollout(spec, obs, strategy, schedule, config, make_context(spec, obs),
                 run_index);
}

std::vector<SimulationTrace> run(const GameSpec& spec,
                                 const ObservationModel& obs,
                                 const NashStrategy& strategy,
                                 const GainSchedule& schedule,
                                 const SimulationConfig& config) {
  return run_impl(spec, obs, strategy, schedule, config, true);
}

std::vector<SimulationTrace> run_serial(const GameSpec& spec,
                                        const ObservationModel& obs,
                                        const NashStrategy& strategy,
                                        const GainSchedule& schedule,
                                        const SimulationConfig& config) {
  return run_impl(spec, obs, strategy, schedule, config, false);
}

MatrixSeq accumulate_error_covariance(const GameSpec& spec,
                                      const ObservationModel& obs,
                                      const NashStrategy& strategy,
                                      const GainSchedule& schedule,
                                      const SimulationConfig& config) {
  return error_covariance_impl(spec, obs, strategy, schedule, config, true);
}

MatrixSeq accumulate_error_covariance_serial(const GameSpec& spec,
                                             const ObservationModel& obs,
                                             const NashStrategy& strategy,
                                             const GainSchedule& schedule,
                                             const SimulationConfig& config) {
  return error_covariance_impl(spec, obs, strategy, schedule, config, false);
}

double stage_cost(const GameSpec& spec, std::size_t agent, std::size_t t,
                  const Vector& x, const Vector& u) {
  const auto& c = spec.costs[agent];
  double v = 0.5 * x.dot(c.Q[t] * x) + c.q[t].dot(x) + spec.cost_constant(agent, t);
  if (u.size() > 0) v += 0.5 * u.dot(c.R[t] * u) + c.r[t].dot(u);
  return v;
}

std::vector<double> realized_cost(const SimulationTrace& trace,
                                  const GameSpec& spec) {
  const std::size_t T = spec.horizon;
  if (trace.state.size() != T + 1 || trace.control.size() != T) {
    throw InstanceError("trace is incomplete");
  }
  std::vector<double> out(spec.num_agents(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      out[i] += stage_cost(spec, i, t, trace.state[t], trace.control[t]);
    }
    out[i] += stage_cost(spec, i, T, trace.state[T], Vector());
  }
  return out;
}

}  // namespace sparse_lqg
