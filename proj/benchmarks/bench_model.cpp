// SPDX-License-Identifier: Apache-2.0
// Forward and forward+backward cost of the desk-scale model.
#include <benchmark/benchmark.h>

#include "sct/model.hpp"
#include "sct/ops.hpp"

namespace {

void BM_TinyForward(benchmark::State& state) {
  const auto cfg = sct::model_preset("sct-tiny");
  auto model = sct::SctModel::build(cfg, 0);
  sct::SynthTaskConfig synth;
  const auto clip = sct::generate_indexed_clip(synth, 0);
  sct::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(clip));
}

void BM_TinyTrainStep(benchmark::State& state) {
  const auto cfg = sct::model_preset("sct-tiny");
  auto model = sct::SctModel::build(cfg, 0);
  sct::SynthTaskConfig synth;
  const auto clip = sct::generate_indexed_clip(synth, 0);
  for (auto _ : state) {
    model.params().zero_grad();
    auto loss = sct::label_smoothed_cross_entropy(model.forward(clip), clip.label, 0.0);
    loss.backward();
  }
}

}  // namespace

BENCHMARK(BM_TinyForward)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TinyTrainStep)->Unit(benchmark::kMillisecond);
