// Serial reference vs OpenMP kernels on transformer-sized shapes.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "hiercrop/kernels.hpp"

namespace k = hiercrop::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <auto Gemm>
void BM_gemm(benchmark::State& state) {
  const std::size_t n = state.range(0), in = state.range(1), out = state.range(2);
  const auto x = random_vec(n * in, 1), w = random_vec(in * out, 2), b = random_vec(out, 3);
  std::vector<double> y(n * out);
  for (auto _ : state) {
    Gemm(x.data(), w.data(), b.data(), y.data(), n, in, out);
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["GFLOP/s"] =
      benchmark::Counter(2.0 * n * in * out, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}

template <auto Forward>
void BM_attention(benchmark::State& state) {
  k::AttentionDims d;
  d.windows = state.range(0);
  d.len = state.range(1);
  d.heads = state.range(2);
  d.head_dim = 32;
  d.scale = 1.0 / std::sqrt(32.0);
  const auto qkv = random_vec(d.windows * d.len * 3 * d.channels(), 4);
  std::vector<double> out(d.windows * d.len * d.channels()), probs(d.prob_size());
  const k::AttentionArgs a{d, qkv.data(), nullptr, nullptr};
  for (auto _ : state) {
    Forward(a, out.data(), probs.data());
    benchmark::DoNotOptimize(out.data());
  }
}

// Token rows x in x out: stage-1 MLP, a spatial ViT projection, a head.
void gemm_args(benchmark::internal::Benchmark* b) {
  b->Args({4608, 128, 512})->Args({1024, 768, 768})->Args({36864, 256, 101});
}

// windows x len x heads: Swin 7x7x2 windows, a global ViT block.
void attention_args(benchmark::internal::Benchmark* b) { b->Args({64, 98, 4})->Args({1, 1024, 12}); }

}  // namespace

BENCHMARK(BM_gemm<k::serial::gemm>)->Name("gemm/serial")->Apply(gemm_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gemm<k::omp::gemm>)->Name("gemm/omp")->Apply(gemm_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_attention<k::serial::attention_forward>)
    ->Name("attention/serial")
    ->Apply(attention_args)
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_attention<k::omp::attention_forward>)
    ->Name("attention/omp")
    ->Apply(attention_args)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
