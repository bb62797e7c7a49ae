#include <benchmark/benchmark.h>

#include "bmqt/sim.hpp"

namespace {

void BM_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  bmqt::ModelParams params;
  bmqt::Stepper stepper(n, params);
  bmqt::InitParams init;
  init.u_amplitude = 0.03;
  init.q_max_eigenvalue = 0.05;
  init.theta_amplitude = 0.02;
  bmqt::FieldState st = bmqt::make_initial_state(stepper.workspace(), init, 7);
  stepper.prime(st);
  for (auto _ : state) stepper.step(st, 1e-4);
  state.SetItemsProcessed(state.iterations() * st.nodes());
}
BENCHMARK(BM_step)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_diagnostics(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  bmqt::ModelParams params;
  bmqt::Stepper stepper(n, params);
  bmqt::FieldState st = bmqt::make_initial_state(stepper.workspace(), bmqt::InitParams{}, 7);
  stepper.prime(st);
  for (auto _ : state) benchmark::DoNotOptimize(stepper.diagnostics(st));
}
BENCHMARK(BM_diagnostics)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
