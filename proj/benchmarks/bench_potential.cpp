#include <benchmark/benchmark.h>

#include "bmqt/potential.hpp"

namespace {

// cold solve cost vs distance to the physical boundary
void BM_solve_mu(benchmark::State& state) {
  const auto& quad = bmqt::default_quadrature();
  const double margin = 1.0 / (10.0 * static_cast<double>(state.range(0)));
  const bmqt::Spectrum s(-1.0 / 3.0 + margin, 1.0 / 6.0 - margin / 2.0, 1.0 / 6.0 - margin / 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(bmqt::solve_mu(s, 1e-12, quad));
}
BENCHMARK(BM_solve_mu)->Arg(1)->Arg(10)->Arg(100);

void BM_warm_solve_mu(benchmark::State& state) {
  const auto& quad = bmqt::default_quadrature();
  const bmqt::Spectrum s(0.2, -0.05, -0.15);
  const bmqt::MuVector warm = bmqt::solve_mu(s, 1e-12, quad);
  for (auto _ : state) benchmark::DoNotOptimize(bmqt::solve_mu(s, 1e-12, quad, &warm));
}
BENCHMARK(BM_warm_solve_mu);

void BM_hess_contract(benchmark::State& state) {
  const auto& quad = bmqt::default_quadrature();
  const bmqt::QTensor q = bmqt::QTensor::from_diag(0.3, -0.1, -0.2);
  const bmqt::QTensor v = bmqt::QTensor::from_diag(0.1, 0.1, -0.2);
  for (auto _ : state) benchmark::DoNotOptimize(bmqt::hess_contract(q, v, 1e-12, quad));
}
BENCHMARK(BM_hess_contract);

}  // namespace
