#include <benchmark/benchmark.h>

#include "bmqt/partition.hpp"

namespace {

void BM_partition_Z(benchmark::State& state) {
  const auto quad = bmqt::build_quadrature(static_cast<int>(state.range(0)),
                                           2 * static_cast<int>(state.range(0)));
  const bmqt::MuVector mu(6.0, -3.0, -3.0);
  for (auto _ : state) benchmark::DoNotOptimize(bmqt::partition_Z(mu, quad));
}
BENCHMARK(BM_partition_Z)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void BM_z_moments(benchmark::State& state) {
  const auto quad = bmqt::build_quadrature(static_cast<int>(state.range(0)),
                                           2 * static_cast<int>(state.range(0)));
  const bmqt::MuVector mu(6.0, -3.0, -3.0);
  for (auto _ : state) benchmark::DoNotOptimize(bmqt::z_moments(mu, quad));
}
BENCHMARK(BM_z_moments)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

}  // namespace
