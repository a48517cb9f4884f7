#include <benchmark/benchmark.h>

#include "fluxloss/fitting.hpp"
#include "fluxloss/model.hpp"
#include "fluxloss/pipeline.hpp"
#include "fluxloss/synth.hpp"

using namespace fluxloss;

namespace {

const MaterialParams kMp;
const PinningParams kPp{2.22e10, 0.701, 743.0};

synth::SynthSpec bench_spec(double noise) {
  synth::SynthSpec spec;
  spec.material = kMp;
  for (int i = 0; i < 25; ++i) {
    spec.t_grid_k.push_back(0.01 + i * (1.3 - 0.01) / 24.0);
  }
  spec.noise.s_rel = noise;
  spec.noise.s_prime_rel = noise;
  spec.seed = 7;
  const double fs[] = {1910.0, 743.0, 497.0};
  const double bs[] = {50e-7, 100e-7, 250e-7};
  for (int i = 0; i < 3; ++i) {
    spec.datasets.push_back({"CD" + std::to_string(i + 2), bs[i],
                             PinningParams{2.22e10, 0.701, fs[i]}, 50.0});
  }
  return spec;
}

void BM_Sensitivity(benchmark::State& state) {
  const double omega = kMp.omega();
  double t = 0.01;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::sensitivity(t, omega, kMp, kPp));
    t = t < 1.3 ? t + 1e-4 : 0.01;
  }
}
BENCHMARK(BM_Sensitivity);

void BM_SurfaceImpedance(benchmark::State& state) {
  const double omega = kMp.omega();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        model::surface_impedance(0.5, 1e-5, omega, kMp, kPp));
  }
}
BENCHMARK(BM_SurfaceImpedance);

void BM_QlFromDecay(benchmark::State& state) {
  const auto trace =
      synth::generate_decay(1e9, 6e9, 1e-15, 0.1, 1e4, 0.01, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pipeline::ql_from_decay(trace, 21));
  }
}
BENCHMARK(BM_QlFromDecay);

void BM_SimultaneousFit(benchmark::State& state) {
  const auto curves = synth::generate_sensitivity_curves(bench_spec(0.05));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit::fit_simultaneous(curves, kMp, {}));
  }
}
BENCHMARK(BM_SimultaneousFit)->Unit(benchmark::kMillisecond);

}  // namespace
