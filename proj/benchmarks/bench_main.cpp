#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "ecgstress/dsp.hpp"
#include "ecgstress/fusion.hpp"
#include "ecgstress/hrv.hpp"
#include "ecgstress/nn.hpp"
#include "ecgstress/random.hpp"
#include "ecgstress/signal.hpp"

using namespace ecgstress;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  return x;
}

void BM_Stft(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(stft_spectrogram(x, SpectrogramParams{}));
}
BENCHMARK(BM_Stft)->Arg(256)->Arg(2560);

void BM_EigSym(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(eig_sym(a));
}
BENCHMARK(BM_EigSym)->Arg(16)->Arg(32)->Arg(64);

void BM_LombScargle(benchmark::State& state) {
  std::vector<double> t, rr;
  double now = 0.0;
  Rng rng(3);
  for (int i = 0; i < state.range(0); ++i) {
    rr.push_back(0.8 + 0.05 * rng.normal());
    now += rr.back();
    t.push_back(now);
  }
  for (auto _ : state) benchmark::DoNotOptimize(freq_features(t, rr));
}
BENCHMARK(BM_LombScargle)->Arg(8)->Arg(64);

void BM_DetectPeaks(benchmark::State& state) {
  const auto s = synth_ecg(1, 60.0, 256.0, 4);
  for (auto _ : state) benchmark::DoNotOptimize(detect_r_peaks(s.recording));
}
BENCHMARK(BM_DetectPeaks);

void BM_Cnn1dForward(benchmark::State& state) {
  const Model m = build_cnn1d(256, 3, 32, 5);
  const auto x = noise(256, 6);
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(x));
}
BENCHMARK(BM_Cnn1dForward);

void BM_Cnn2dForward(benchmark::State& state) {
  const Model m = build_cnn2d(33, 13, 3, 32, 5);
  const auto x = noise(33 * 13, 6);
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(x));
}
BENCHMARK(BM_Cnn2dForward);

void BM_Cnn2dTrainEpoch(benchmark::State& state) {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 96; ++i) {
    x.push_back(noise(33 * 13, 100 + static_cast<std::uint64_t>(i)));
    y.push_back(i % 3);
  }
  TrainConfig cfg;
  cfg.epochs = 1;
  const Model m = build_cnn2d(33, 13, 3, 32, 5);
  for (auto _ : state) benchmark::DoNotOptimize(train(m, x, y, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_Cnn2dTrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
