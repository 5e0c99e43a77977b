// SPDX-License-Identifier: Apache-2.0
// Dense vs LSH attention on one head of Gaussian tokens.
#include <benchmark/benchmark.h>

#include "sct/lsh.hpp"
#include "sct/random.hpp"

namespace {

std::pair<sct::Tensor, sct::Tensor> inputs(std::size_t s, std::size_t d) {
  sct::Rng rng(s);
  std::vector<double> qk(s * d), v(s * d);
  for (auto& x : qk) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  return {sct::Tensor({1, s, d}, qk), sct::Tensor({1, s, d}, v)};
}

void BM_DenseAttention(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  auto [qk, v] = inputs(s, 32);
  sct::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(sct::dense_attend(qk, v));
  state.SetComplexityN(state.range(0));
}

void BM_LshAttention(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  auto [qk, v] = inputs(s, 32);
  sct::LshConfig cfg;
  cfg.n_rounds = static_cast<std::size_t>(state.range(1));
  sct::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(sct::lsh_attend(qk, v, cfg));
  state.SetComplexityN(state.range(0));
}

void BM_LshHash(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  auto [qk, v] = inputs(s, 32);
  for (auto _ : state) benchmark::DoNotOptimize(sct::angular_lsh_hash(qk.data(), s, 32, 64, 0, 0));
}

}  // namespace

BENCHMARK(BM_DenseAttention)->RangeMultiplier(2)->Range(512, 4096)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_LshAttention)
    ->ArgsProduct({{512, 1024, 2048, 4096}, {1, 4}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LshHash)->Arg(1024)->Arg(4096)->Unit(benchmark::kMicrosecond);
