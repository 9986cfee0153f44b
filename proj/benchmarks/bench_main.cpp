#include <benchmark/benchmark.h>

#include <random>

#include "tractpipe/phantom.hpp"
#include "tractpipe/registration.hpp"
#include "tractpipe/segmentation.hpp"

using namespace tractpipe;

namespace {

RealVolume noise_volume(Dims d, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  RealVolume v(d, channels);
  for (auto& x : v.data()) x = u(rng);
  return v;
}

Dims cube(const benchmark::State& s) {
  const int n = static_cast<int>(s.range(0));
  return Dims{n, n, n};
}

void BM_Warp(benchmark::State& state) {
  const auto d = cube(state);
  const auto v = noise_volume(d, 3, 1);
  const auto f = random_smooth_field(d, 2.0, 4.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(warp(v, f));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.voxels()));
}
BENCHMARK(BM_Warp)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_GradRegLoss(benchmark::State& state) {
  const auto d = cube(state);
  const auto m = noise_volume(d, 3, 3);
  const auto t = noise_volume(d, 3, 4);
  const auto f = random_smooth_field(d, 2.0, 4.0, 5);
  for (auto _ : state) benchmark::DoNotOptimize(grad_reg_loss(f, m, t, 1e6));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.voxels()));
}
BENCHMARK(BM_GradRegLoss)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ForwardSlice(benchmark::State& state) {
  const auto v = noise_volume(Dims{32, 32, 32}, 3, 6);
  const auto slice = extract_slice(v, PlaneAxis::Axial, 16);
  const auto model = PatchMlp::initialized(static_cast<int>(state.range(0)), 3, 32, 3, 7);
  for (auto _ : state) benchmark::DoNotOptimize(model.forward_slice(slice));
  state.SetItemsProcessed(state.iterations() * 32 * 32);
}
BENCHMARK(BM_ForwardSlice)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_PredictSubject(benchmark::State& state) {
  const auto v = noise_volume(cube(state), 3, 8);
  const auto model = PatchMlp::initialized(2, 3, 32, 3, 9);
  for (auto _ : state) benchmark::DoNotOptimize(predict_subject(model, v));
}
BENCHMARK(BM_PredictSubject)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
