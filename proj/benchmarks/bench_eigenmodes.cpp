#include "esi/lbo.hpp"
#include "esi/mesh.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_AssembleLbo(benchmark::State& state) {
  const auto mesh = esi::make_icosphere(static_cast<int>(state.range(0)), 75.0);
  for (auto _ : state) benchmark::DoNotOptimize(esi::assemble_lbo(mesh));
  state.counters["vertices"] = mesh.vertex_count();
}
BENCHMARK(BM_AssembleLbo)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

// Dense path below the size cutoff, shift-invert above it.
void BM_Eigenmodes(benchmark::State& state) {
  const auto mesh = esi::make_icosphere(static_cast<int>(state.range(0)), 75.0);
  const auto lbo = esi::assemble_lbo(mesh);
  const int count = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(esi::eigenmodes(lbo, count));
  state.counters["vertices"] = mesh.vertex_count();
}
BENCHMARK(BM_Eigenmodes)
    ->Args({3, 50})
    ->Args({3, 300})
    ->Args({4, 50})
    ->Args({5, 50})
    ->Unit(benchmark::kMillisecond);

void BM_Geodesics(benchmark::State& state) {
  const auto mesh = esi::make_icosphere(static_cast<int>(state.range(0)), 75.0);
  for (auto _ : state) benchmark::DoNotOptimize(esi::geodesic_distances(mesh, 0));
}
BENCHMARK(BM_Geodesics)->DenseRange(3, 5)->Unit(benchmark::kMicrosecond);

}  // namespace
