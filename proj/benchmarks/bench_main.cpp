#include <benchmark/benchmark.h>

#include "htreg/data.hpp"
#include "htreg/nn.hpp"
#include "htreg/rng.hpp"
#include "htreg/spectral.hpp"
#include "htreg/tail.hpp"

namespace {

htreg::Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  htreg::Rng rng(seed);
  htreg::Matrix w(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
  }
  return w;
}

void BM_GramSpectrum(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const htreg::Matrix w = random_matrix(n, n, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(htreg::gram_spectrum(w));
  }
}
BENCHMARK(BM_GramSpectrum)->Arg(64)->Arg(128)->Arg(256);

void BM_GramSpectrumRect(benchmark::State& state) {
  const htreg::Matrix w = random_matrix(784, 128, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(htreg::gram_spectrum(w));
  }
}
BENCHMARK(BM_GramSpectrumRect);

void BM_HillEstimator(benchmark::State& state) {
  const auto samples =
      htreg::sample_pareto(3.0, static_cast<int>(state.range(0)), 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(htreg::hill_estimator(samples));
  }
}
BENCHMARK(BM_HillEstimator)->Arg(1000)->Arg(100000);

void BM_PenaltyGradient(benchmark::State& state) {
  const auto kind = static_cast<htreg::PenaltyKind>(state.range(0));
  const htreg::Matrix w = random_matrix(128, 128, 3);
  const htreg::Spectrum s = htreg::gram_spectrum(w);
  htreg::PenaltySpec spec;
  spec.kind = kind;
  for (auto _ : state) {
    benchmark::DoNotOptimize(htreg::penalty_gradient(kind, w, s, spec));
  }
}
BENCHMARK(BM_PenaltyGradient)
    ->Arg(static_cast<int>(htreg::PenaltyKind::WeightedAlpha))
    ->Arg(static_cast<int>(htreg::PenaltyKind::StableRank))
    ->Arg(static_cast<int>(htreg::PenaltyKind::PowerLawPrior))
    ->Arg(static_cast<int>(htreg::PenaltyKind::FrechetPrior));

void BM_TrainEpoch(benchmark::State& state) {
  const htreg::Dataset train_set = htreg::synth_blobs(4, 16, 256, 4.0, 5);
  const htreg::Dataset test_set = htreg::synth_blobs(4, 16, 64, 4.0, 6);
  htreg::TrainConfig config;
  config.layer_sizes = {16, 32, 32, 4};
  config.epochs = 1;
  config.batch_size = 32;
  config.lr_milestones = {};
  config.penalty.kind = htreg::PenaltyKind::FrechetPrior;
  config.penalty.coefficient = 1e-4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(htreg::train(config, train_set, test_set));
  }
}
BENCHMARK(BM_TrainEpoch);

}  // namespace

BENCHMARK_MAIN();
