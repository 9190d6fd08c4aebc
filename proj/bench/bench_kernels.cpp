// Serial reference vs OpenMP kernels: per-agent schedule solves, Monte Carlo
// rollouts and the error-covariance reduction.

#include "sparse_lqg/formation.hpp"
#include "sparse_lqg/simulator.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

namespace {

using namespace sparse_lqg;

struct Fixture {
  FormationGame game = build_formation_game();
  NashStrategy strategy = solve_feedback_nash(game.spec);
  SimulationConfig config;
  GainSchedule schedule;

  Fixture() {
    config.policy = ConstantLambda{50.0};
    schedule = compute_gain_schedule(game.spec, game.observation, strategy, config);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_ScheduleSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_gain_schedule_serial(
        f.game.spec, f.game.observation, f.strategy, f.config));
  }
}

void BM_ScheduleParallel(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_gain_schedule(
        f.game.spec, f.game.observation, f.strategy, f.config));
  }
}

void BM_RunSerial(benchmark::State& state) {
  const auto& f = fixture();
  SimulationConfig cfg = f.config;
  cfg.runs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_serial(f.game.spec, f.game.observation, f.strategy, f.schedule, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_RunParallel(benchmark::State& state) {
  const auto& f = fixture();
  SimulationConfig cfg = f.config;
  cfg.runs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run(f.game.spec, f.game.observation, f.strategy, f.schedule, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ErrorCovarianceSerial(benchmark::State& state) {
  const auto& f = fixture();
  SimulationConfig cfg = f.config;
  cfg.runs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_error_covariance_serial(
        f.game.spec, f.game.observation, f.strategy, f.schedule, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ErrorCovarianceParallel(benchmark::State& state) {
  const auto& f = fixture();
  SimulationConfig cfg = f.config;
  cfg.runs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_error_covariance(
        f.game.spec, f.game.observation, f.strategy, f.schedule, cfg));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ScheduleSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScheduleParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunParallel)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorCovarianceSerial)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ErrorCovarianceParallel)->Arg(512)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
