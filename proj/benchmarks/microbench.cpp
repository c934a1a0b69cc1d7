// Copyright 2026 The TGB Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <vector>

#include "tgb/bootstrap.hpp"
#include "tgb/bridge.hpp"
#include "tgb/rng.hpp"
#include "tgb/spans.hpp"
#include "tgb/synth.hpp"

namespace {

std::vector<double> random_scores(std::size_t n, std::uint64_t seed) {
  tgb::Rng rng(seed);
  std::vector<double> s(n);
  for (auto& v : s) v = rng.uniform();
  return s;
}

void BM_DecodeSpans(benchmark::State& state) {
  const auto scores = random_scores(static_cast<std::size_t>(state.range(0)), 1);
  const auto logits = tgb::rc_logits_from_scores(scores);
  for (auto _ : state) benchmark::DoNotOptimize(tgb::decode_spans(logits, 3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DecodeSpans)->RangeMultiplier(4)->Range(256, 1 << 16)->Complexity();

void BM_ProposalBaseline(benchmark::State& state) {
  const auto n = state.range(0);
  const auto scores = random_scores(static_cast<std::size_t>(n), 2);
  const auto params = tgb::BaselineParams::defaults_for(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        tgb::baseline_ground(scores, tgb::BaselineStrategy::kProposal, params));
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_ProposalBaseline)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

void BM_MonotonicStack(benchmark::State& state) {
  const auto scores = random_scores(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(tgb::max_span_monotonic_stack(scores));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MonotonicStack)->RangeMultiplier(4)->Range(64, 1 << 16)->Complexity();

void BM_BridgeForward(benchmark::State& state) {
  const tgb::Bridge<float> bridge{tgb::BridgeConfig{}};
  tgb::ParamStore<float> params;
  bridge.init_params(params, 1);
  tgb::SynthConfig cfg;
  cfg.min_frames = cfg.max_frames = static_cast<std::size_t>(state.range(0));
  const auto ex = tgb::generate_example(cfg, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bridge.infer_logits(params, ex.motion, ex.query));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BridgeForward)->Arg(32)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_BridgeForwardBackward(benchmark::State& state) {
  const tgb::Bridge<float> bridge{tgb::BridgeConfig{}};
  tgb::ParamStore<float> params;
  bridge.init_params(params, 1);
  const auto ex = tgb::generate_example(tgb::SynthConfig{}, 0);
  const auto labels = tgb::labels_from_spans(ex.gold_spans, 32);
  for (auto _ : state) {
    tgb::Graph<float> g;
    auto out = bridge.forward(g, params, ex.motion, ex.query);
    auto loss = tgb::ag::cross_entropy_3class(g, out.logits, labels, {});
    params.zero_grad();
    g.backward(loss);
  }
}
BENCHMARK(BM_BridgeForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace

// The packaged benchmark_main archive carries LTO bytecode tied to another
// compiler build, so the entry point lives here.
BENCHMARK_MAIN();
