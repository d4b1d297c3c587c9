// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "flowlab/data_eval.hpp"
#include "flowlab/dynamics.hpp"
#include "flowlab/net.hpp"
#include "flowlab/oracle.hpp"
#include "flowlab/paths.hpp"
#include "flowlab/rng.hpp"

using namespace flowlab;

namespace {

std::vector<Vector> normal_cloud(std::size_t n, std::uint64_t seed) {
  std::vector<Vector> xs(n, Vector(2));
  Rng rng(seed);
  for (auto& x : xs) rng.fill_normal(x);
  return xs;
}

template <bool Serial>
void BM_EnergyDistance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normal_cloud(n, 1), b = normal_cloud(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Serial ? energy_distance_serial(a, b) : energy_distance(a, b));
  }
}

template <bool Serial>
void BM_LossAndGrads(benchmark::State& state) {
  MlpSpec spec;
  const auto params = mlp_init(spec, 3);
  TrainingBatch batch(2);
  Rng rng(4);
  Vector x(2), target(2);
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    rng.fill_normal(x);
    rng.fill_normal(target);
    batch.push(x, rng.uniform(), kNullLabel, target);
  }
  for (auto _ : state) {
    auto r = Serial ? mse_loss_and_grads_serial(params, batch) : mse_loss_and_grads(params, batch);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Serial>
void BM_SimulateBatch(benchmark::State& state) {
  MlpSpec spec;
  BatchSimulation sim;
  sim.field = as_field(mlp_init(spec, 5));
  sim.grid = {100, 0.0, 1.0};
  sim.dim = 2;
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto r = Serial ? simulate_batch_serial(sim, n, 6) : simulate_batch(sim, n, 6);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Serial>
void BM_ResidualReport(benchmark::State& state) {
  const GaussianPath path{NoiseSchedule{ScheduleKind::kCondOT}, 2};
  const Dataset data = Dataset::uniform({{-1.0, 0.0}, {1.0, 0.5}, {0.0, -1.0}});
  Rng rng(7);
  const auto probes =
      mass_weighted_probes(path, data, static_cast<std::size_t>(state.range(0)), 0.05, 0.8, rng);
  const auto density = marginal_density_function(path, data);
  const auto field = sde_extension_field(path, data, 0.5);
  const std::function<double(double)> sigma = [](double) { return 0.5; };
  for (auto _ : state) {
    auto r = Serial ? residual_report_serial(density, field, sigma, probes)
                    : residual_report(density, field, sigma, probes);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK(BM_EnergyDistance<true>)->Name("energy_distance/serial")->Arg(1024);
BENCHMARK(BM_EnergyDistance<false>)->Name("energy_distance/omp")->Arg(1024);
BENCHMARK(BM_LossAndGrads<true>)->Name("mse_loss_and_grads/serial")->Arg(256);
BENCHMARK(BM_LossAndGrads<false>)->Name("mse_loss_and_grads/omp")->Arg(256);
BENCHMARK(BM_SimulateBatch<true>)->Name("simulate_batch/serial")->Arg(256);
BENCHMARK(BM_SimulateBatch<false>)->Name("simulate_batch/omp")->Arg(256);
BENCHMARK(BM_ResidualReport<true>)->Name("residual_report/serial")->Arg(200);
BENCHMARK(BM_ResidualReport<false>)->Name("residual_report/omp")->Arg(200);

BENCHMARK_MAIN();
