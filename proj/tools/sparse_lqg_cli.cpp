// sparse-lqg: command-line driver.
//
//   sparse-lqg nash     --config run.json --out out/
//   sparse-lqg schedule --scenario formation3 --lambda 50
//   sparse-lqg simulate --scenario formation3 --lambda adaptive --runs 20
//   sparse-lqg sweep    --scenario formation3 --lambda 0,50,1000
//   sparse-lqg check    --scenario formation3 --lambda 50
//
// Exit codes: 0 success, 2 invalid configuration, 3 solver failure, 1 other.

#include "sparse_lqg/config.hpp"
#include "sparse_lqg/errors.hpp"
#include "sparse_lqg/export.hpp"
#include "sparse_lqg/instances.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace sparse_lqg;
namespace fs = std::filesystem;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::string lambda;
  std::optional<double> rth;
  std::string scenario;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--out", f.out, "output directory (default: config or ./out)");
  cmd->add_option("--seed", f.seed, "noise seed");
  cmd->add_option("--runs", f.runs, "number of Monte Carlo runs");
  cmd->add_option("--lambda", f.lambda,
                  "regularization: a number, adaptive or adaptive:L1:L2 "
                  "(comma-separated list for sweep)");
  cmd->add_option("--rth", f.rth, "reset threshold in (0, 1]");
  cmd->add_option("--scenario", f.scenario, "built-in scenario (formation3)");
}

RunConfig resolve(const Flags& f, bool policy_list) {
  RunConfig cfg;
  if (!f.config.empty()) {
    cfg = load_run_config(f.config);
  }
  if (!f.scenario.empty()) {
    if (f.scenario != kFormationScenario) {
      throw ConfigError("--scenario", "unknown scenario '" + f.scenario + "'");
    }
    if (cfg.game) throw ConfigError("--scenario", "config already has an inline game");
    cfg.scenario = f.scenario;
  }
  if (!cfg.scenario && !cfg.game) {
    throw ConfigError("--scenario", "give --scenario or --config");
  }
  if (f.seed) cfg.simulation.seed = *f.seed;
  if (f.runs) {
    if (*f.runs == 0) throw ConfigError("--runs", "must be at least 1");
    cfg.simulation.runs = *f.runs;
  }
  if (f.rth) {
    if (!(*f.rth > 0.0 && *f.rth <= 1.0)) throw ConfigError("--rth", "must lie in (0, 1]");
    cfg.simulation.r_th = *f.rth;
  }
  if (!f.lambda.empty()) {
    if (policy_list) {
      cfg.sweep = parse_policy_list(f.lambda, cfg.formation);
    } else {
      cfg.simulation.policy = parse_policy(f.lambda, cfg.formation);
    }
  }
  if (!f.out.empty()) cfg.output_dir = f.out;
  return cfg;
}

const FormationParams* formation_of(const Instance& inst, const RunConfig& cfg) {
  return inst.formation ? &cfg.formation : nullptr;
}

void write_metrics(const fs::path& dir, const MetricsSummary& s) {
  write_text(dir / "metrics.json", summary_to_json(s).dump(1) + "\n");
}

void print_summary(const MetricsSummary& s) {
  std::printf("policy %s  r_th %s  runs %zu\n", s.policy.c_str(),
              format_double(s.r_th).c_str(), s.runs);
  for (std::size_t i = 0; i < s.usage_fraction.size(); ++i) {
    std::printf("  agent %zu: usage %.4f  peak |Sigma|_F %.6g", i,
                s.usage_fraction[i], s.peak_covariance_norm[i]);
    if (!s.mean_cost.empty()) std::printf("  mean cost %.6g", s.mean_cost[i]);
    std::printf("\n");
  }
  if (s.leader_tracking_cost) {
    std::printf("  leader tracking cost %.6g\n", *s.leader_tracking_cost);
  }
}

int cmd_nash(const RunConfig& cfg) {
  const Instance inst = make_instance(cfg);
  const NashStrategy strategy = solve_feedback_nash(inst.spec);
  const fs::path out = cfg.output_dir;
  export_strategy(out, inst.spec, strategy);
  std::printf("nash: T=%zu agents=%zu foc residual %.3e\n", inst.spec.horizon,
              inst.spec.num_agents(), foc_residual(inst.spec, strategy));
  for (std::size_t i = 0; i < inst.spec.num_agents(); ++i) {
    std::printf("  agent %zu value constant %.10g\n", i,
                strategy.value_constant[i].front());
  }
  return 0;
}

MetricsSummary simulate_into(const fs::path& out, const Instance& inst,
                             const RunConfig& cfg, const SimulationConfig& sim,
                             bool rollouts) {
  const NashStrategy strategy = solve_feedback_nash(inst.spec);
  const GainSchedule schedule =
      compute_gain_schedule(inst.spec, inst.observation, strategy, sim);
  export_schedule(out, schedule, inst.observation);
  std::vector<SimulationTrace> traces;
  if (rollouts) {
    traces = run(inst.spec, inst.observation, strategy, schedule, sim);
    export_traces(out, inst.spec, traces);
  }
  const auto summary =
      summarize(schedule, traces, inst.spec, sim, formation_of(inst, cfg));
  write_metrics(out, summary);
  return summary;
}

int cmd_schedule(const RunConfig& cfg) {
  const Instance inst = make_instance(cfg);
  print_summary(simulate_into(cfg.output_dir, inst, cfg, cfg.simulation, false));
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  const Instance inst = make_instance(cfg);
  print_summary(simulate_into(cfg.output_dir, inst, cfg, cfg.simulation, true));
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const Instance inst = make_instance(cfg);
  std::vector<RegularizationPolicy> policies = cfg.sweep;
  if (policies.empty()) {
    policies = {ConstantLambda{0.0}, ConstantLambda{50.0}, ConstantLambda{1000.0}};
  }
  const fs::path out = cfg.output_dir;
  std::string table =
      "policy,agent,usage_fraction,peak_covariance_norm,mean_cost,"
      "leader_tracking_cost\n";
  for (std::size_t k = 0; k < policies.size(); ++k) {
    SimulationConfig sim = cfg.simulation;
    sim.policy = policies[k];
    char name[32];
    std::snprintf(name, sizeof name, "sweep_%02zu", k);
    const auto s = simulate_into(out / name, inst, cfg, sim, true);
    print_summary(s);
    for (std::size_t i = 0; i < s.usage_fraction.size(); ++i) {
      table += s.policy + ',' + std::to_string(i) + ',' +
               format_double(s.usage_fraction[i]) + ',' +
               format_double(s.peak_covariance_norm[i]) + ',' +
               format_double(s.mean_cost[i]) + ',' +
               (s.leader_tracking_cost ? format_double(*s.leader_tracking_cost)
                                       : std::string()) +
               '\n';
    }
  }
  write_text(out / "sweep.csv", table);
  return 0;
}

int cmd_check(const RunConfig& cfg) {
  const Instance inst = make_instance(cfg);
  const NashStrategy strategy = solve_feedback_nash(inst.spec);
  const GainSchedule schedule = compute_gain_schedule(
      inst.spec, inst.observation, strategy, cfg.simulation);
  const fs::path out = cfg.output_dir;

  double max_kkt = 0.0;
  double max_gap = 0.0;
  std::size_t solves = 0;
  std::size_t interagent = 0;
  std::size_t hypothesis = 0;
  std::size_t violated = 0;
  for (const auto& row : schedule.steps) {
    for (const auto& step : row) {
      ++solves;
      max_kkt = std::max(max_kkt, step.kkt);
      max_gap = std::max(max_gap, step.conic_gap);
      if (step.interagent) ++interagent;
      if (step.theorem_hypothesis) ++hypothesis;
      if (step.theorem_violated) ++violated;
    }
  }
  const double foc = foc_residual(inst.spec, strategy);
  const bool kkt_ok = max_kkt <= cfg.simulation.solver.kkt_tolerance;
  const bool gap_ok = max_gap <= 1e-10;

  const auto suite = run_theorem1_suite(cfg.simulation.seed, cfg.check_instances,
                                        cfg.simulation.solver);
  const bool guaranteed = suite.hypothesis > 0 && suite.all_reset();
  const double rate = suite.groups == 0
                          ? 0.0
                          : static_cast<double>(suite.resets) /
                                static_cast<double>(suite.groups);

  std::printf("nash foc residual: %.3e\n", foc);
  std::printf("schedule solves: %zu  max kkt %.3e (%s)  max conic gap %.3e (%s)\n",
              solves, max_kkt, kkt_ok ? "ok" : "FAIL", max_gap,
              gap_ok ? "ok" : "FAIL");
  std::printf("reset bound on schedule: %zu interagent steps, hypothesis held at %zu, "
              "violations %zu\n",
              interagent, hypothesis, violated);
  std::printf("reset bound suite: %zu instances, %zu vacuous, %zu at 0.99 x bound, "
              "groups reset %zu/%zu (%.2f%%)\n",
              suite.instances, suite.vacuous, suite.hypothesis, suite.resets,
              suite.groups, 100.0 * rate);
  std::printf("reset guaranteed: %s\n", guaranteed ? "yes" : "no");

  nlohmann::json doc;
  doc["foc_residual"] = foc;
  doc["schedule"] = {{"solves", solves},
                     {"max_kkt", max_kkt},
                     {"max_conic_gap", max_gap},
                     {"interagent_steps", interagent},
                     {"theorem_hypothesis", hypothesis},
                     {"theorem_violations", violated}};
  doc["theorem1_suite"] = {{"instances", suite.instances},
                           {"vacuous", suite.vacuous},
                           {"hypothesis", suite.hypothesis},
                           {"groups", suite.groups},
                           {"resets", suite.resets},
                           {"reset_rate", rate},
                           {"max_kkt", suite.max_kkt},
                           {"reset_guaranteed", guaranteed}};
  write_text(out / "check.json", doc.dump(1) + "\n");

  const auto& first = schedule.steps.front().front();
  const auto& o = inst.observation.agents.front();
  export_conic(out, vectorize_to_cone(assemble_problem(
                        first.prior, o.C.front(), o.V.front(), first.lambdas,
                        o.groups)));

  const bool ok = kkt_ok && gap_ok && violated == 0 &&
                  (suite.hypothesis == 0 || suite.all_reset());
  return ok ? 0 : kExitOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LQG games with sparse distributed estimation"};
  app.require_subcommand(1);
  Flags flags;
  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&);
    bool policy_list;
  };
  const Command commands[] = {
      {"nash", "feedback Nash strategy", cmd_nash, false},
      {"schedule", "gain schedule, masks and covariances (no sampling)",
       cmd_schedule, false},
      {"simulate", "schedule plus Monte Carlo rollouts", cmd_simulate, false},
      {"sweep", "simulate once per regularization policy", cmd_sweep, true},
      {"check", "KKT, conic and reset-guarantee diagnostics", cmd_check, false},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_flags(sub, flags);
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (std::size_t k = 0; k < subs.size(); ++k) {
      if (subs[k]->parsed()) {
        const RunConfig cfg = resolve(flags, commands[k].policy_list);
        return commands[k].fn(cfg);
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const InstanceError& e) {
    std::fprintf(stderr, "invalid instance: %s\n", e.what());
    return kExitConfig;
  } catch (const NashSolveError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const DegenerateInnovationError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOther;
}
