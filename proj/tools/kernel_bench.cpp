// Serial vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "gazeattn/kernels.hpp"
#include "gazeattn/rng.hpp"

using namespace gazeattn;

namespace {

FeatureMatrix random_features(std::size_t n, std::size_t d) {
  SplitMix64 rng(n * 131 + d);
  FeatureMatrix f(n, d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : row) v = rng.normal();
    normalize_in_place(row);
    f.set_row(i, row);
  }
  return f;
}

GrayImage textured(int w, int h, int shift) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at(x, y) = static_cast<std::uint8_t>(mix64((static_cast<std::uint64_t>(x - shift + 4096) << 20) ^
                                                     static_cast<std::uint64_t>(y + 4096)) >> 56);
  return img;
}

template <SquareMatrix (*Kernel)(const FeatureMatrix&)>
void distances(benchmark::State& state) {
  const auto f = random_features(static_cast<std::size_t>(state.range(0)), 128);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f));
  state.SetComplexityN(state.range(0));
}

template <SquareMatrix (*Kernel)(const FeatureMatrix&, double)>
void rbf(benchmark::State& state) {
  const auto f = random_features(static_cast<std::size_t>(state.range(0)), 128);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(f, 1.0 / 128.0));
}

template <std::vector<kernels::BlockMotion> (*Kernel)(const GrayImage&, const GrayImage&, int, int)>
void block_search(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0)), h = w * 3 / 4;
  const GrayImage a = textured(w, h, 0), b = textured(w, h, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b, 16, 8));
}

}  // namespace

BENCHMARK(distances<kernels::serial::pairwise_sq_distances>)->Name("pairwise_sq_distances/serial")->Arg(256)->Arg(1024);
BENCHMARK(distances<kernels::parallel::pairwise_sq_distances>)->Name("pairwise_sq_distances/parallel")->Arg(256)->Arg(1024);
BENCHMARK(rbf<kernels::serial::rbf_kernel>)->Name("rbf_kernel/serial")->Arg(256)->Arg(1024);
BENCHMARK(rbf<kernels::parallel::rbf_kernel>)->Name("rbf_kernel/parallel")->Arg(256)->Arg(1024);
BENCHMARK(block_search<kernels::serial::block_motion>)->Name("block_motion/serial")->Arg(160)->Arg(320);
BENCHMARK(block_search<kernels::parallel::block_motion>)->Name("block_motion/parallel")->Arg(160)->Arg(320);

BENCHMARK_MAIN();
