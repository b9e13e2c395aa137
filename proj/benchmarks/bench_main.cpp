#include <benchmark/benchmark.h>

#include "spherelab/kernels.hpp"
#include "spherelab/mlp.hpp"
#include "spherelab/regression.hpp"
#include "spherelab/spectral.hpp"
#include "spherelab/spheres.hpp"

namespace {

using namespace spherelab;

SpheresDataset data(Index n) {
  SpheresConfig c;
  c.seed = 7;
  return sample(c, n);
}

void BM_KernelValue(benchmark::State& state) {
  const auto d = data(2);
  const KernelSpec spec{KernelFamily::Ntk, static_cast<int>(state.range(0)), 1.0, 100};
  for (auto _ : state) benchmark::DoNotOptimize(kernel_value(spec, d.point(0), d.point(1)));
}
BENCHMARK(BM_KernelValue)->Arg(1)->Arg(3)->Arg(6);

void BM_Gram(benchmark::State& state) {
  const auto d = data(state.range(0));
  const KernelSpec spec{KernelFamily::Ntk, 3, 1.0, 100};
  for (auto _ : state) benchmark::DoNotOptimize(gram(spec, d.X));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Gram)->RangeMultiplier(4)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
  const auto d = data(state.range(0));
  const KernelSpec spec{KernelFamily::Ntk, 3, 1.0, 100};
  for (auto _ : state) benchmark::DoNotOptimize(Predictor::fit(spec, d).gamma());
}
BENCHMARK(BM_Fit)->RangeMultiplier(4)->Range(64, 1024)->Unit(benchmark::kMillisecond);

void BM_Decompose(benchmark::State& state) {
  const auto d = data(state.range(0));
  const Predictor p = Predictor::fit({KernelFamily::Nngp, 2, 0.1, 100}, d);
  for (auto _ : state) benchmark::DoNotOptimize(SpectralDecomposition::decompose(p).dominant_index());
}
BENCHMARK(BM_Decompose)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_MlpGradientStep(benchmark::State& state) {
  const auto d = data(state.range(0));
  const MlpParams p = MlpParams::initialize({100, static_cast<int>(state.range(1)), 2, 1.0, 3});
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradient(p, d).loss);
}
BENCHMARK(BM_MlpGradientStep)->Args({64, 256})->Args({512, 1000})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
