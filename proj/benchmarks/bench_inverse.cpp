#include "esi/basis.hpp"
#include "esi/forward.hpp"
#include "esi/inverse.hpp"
#include "esi/simulate.hpp"

#include <benchmark/benchmark.h>

namespace {

// 642-vertex sphere, 64 sensors, one noisy patch trial.
struct Problem {
  esi::TriMesh mesh = esi::make_icosphere(3, 75.0);
  esi::ForwardModel fm =
      esi::analytic_leadfield(mesh, esi::make_sensor_cap(64, 93.75, Eigen::Vector3d::Zero(), 1.0));
  esi::BasisSet gbf = esi::gbf_basis(mesh, 300);
  esi::TrialRecord trial = [this] {
    esi::NoiseSpec spec;
    spec.snr_db = 5.0;
    spec.seed = 1;
    return esi::make_trial(fm, esi::patch_source(mesh, 10, 30.0), spec);
  }();
};

const Problem& problem() {
  static const Problem p;
  return p;
}

void BM_GbfMapFixedBeta(benchmark::State& state) {
  const auto& p = problem();
  const auto prior = esi::build_prior(p.gbf);
  for (auto _ : state) {
    benchmark::DoNotOptimize(esi::solve_map(p.trial.noisy_sensors, p.fm, p.gbf, prior, 1.0));
  }
}
BENCHMARK(BM_GbfMapFixedBeta)->Unit(benchmark::kMillisecond);

void BM_GbfMapDiscrepancy(benchmark::State& state) {
  const auto& p = problem();
  const auto prior = esi::build_prior(p.gbf);
  for (auto _ : state) {
    const auto sel = esi::select_beta_discrepancy(p.trial.noisy_sensors, p.fm, p.gbf, prior,
                                                  p.trial.noise_power);
    benchmark::DoNotOptimize(esi::solve_map(p.trial.noisy_sensors, p.fm, p.gbf, prior, sel.beta));
  }
}
BENCHMARK(BM_GbfMapDiscrepancy)->Unit(benchmark::kMillisecond);

void BM_Mne(benchmark::State& state) {
  const auto& p = problem();
  for (auto _ : state) {
    benchmark::DoNotOptimize(esi::solve_mne(p.trial.noisy_sensors, p.fm, std::nullopt, 1.0));
  }
}
BENCHMARK(BM_Mne)->Unit(benchmark::kMillisecond);

void BM_Sloreta(benchmark::State& state) {
  const auto& p = problem();
  for (auto _ : state) {
    benchmark::DoNotOptimize(esi::solve_sloreta(p.trial.noisy_sensors, p.fm, std::nullopt, 1.0));
  }
}
BENCHMARK(BM_Sloreta)->Unit(benchmark::kMillisecond);

void BM_Eloreta(benchmark::State& state) {
  const auto& p = problem();
  const double beta = 0.01 * esi::MneProblem(p.fm).beta_scale();
  for (auto _ : state) {
    benchmark::DoNotOptimize(esi::solve_eloreta(p.trial.noisy_sensors, p.fm, std::nullopt, beta));
  }
}
BENCHMARK(BM_Eloreta)->Unit(benchmark::kMillisecond);

}  // namespace
