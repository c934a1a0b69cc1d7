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

#include <algorithm>

#include "tgb/gradcheck.hpp"
#include "tgb/rng.hpp"
#include "tgb/training.hpp"

namespace tgb {

BridgeGradCheckSetup BridgeGradCheckSetup::tiny() {
  BridgeGradCheckSetup s;
  s.bridge.d_model = 8;
  s.bridge.heads = 2;
  s.bridge.layers = 2;
  s.bridge.ffn_mult = 2;
  s.bridge.feature_dim = 4;
  s.bridge.vocab_size = 16;
  return s;
}

GradCheckReport check_bridge_gradients(const BridgeGradCheckSetup& setup,
                                       const GradCheckOptions& opts) {
  const BridgeConfig& cfg = setup.bridge;
  cfg.validate();
  Bridge<double> bridge(cfg);
  ParamStore<double> params;
  bridge.init_params(params, setup.seed);

  Rng rng(hash_combine(setup.seed, 0x6772616463686bULL));
  if (setup.embedding_std > 0.0) {
    for (auto& v : params.value("query.embedding").values()) v = rng.normal(0.0, setup.embedding_std);
  }
  const std::size_t T = setup.frames;
  MotionFeatureSequence motion;
  if (cfg.grid_height > 0) {
    motion.grid_height = cfg.grid_height;
    motion.grid_width = cfg.grid_width;
    motion.raw_grid = Tensor<float>({T, cfg.grid_height * cfg.grid_width * 2});
    for (auto& v : motion.raw_grid.values()) v = static_cast<float>(rng.normal());
    motion.values = Tensor<float>({T, cfg.feature_dim});
  } else {
    motion.values = Tensor<float>({T, cfg.feature_dim});
  }
  for (auto& v : motion.values.values()) v = static_cast<float>(rng.normal());

  QueryTokens query;
  query.vocab_size = cfg.vocab_size;
  query.ids.push_back(kClsTokenId);
  for (std::size_t i = 1; i < setup.tokens; ++i) {
    query.ids.push_back(static_cast<int>(
        rng.uniform_int(1, static_cast<std::int64_t>(cfg.vocab_size) - 1)));
  }

  // One span of 2..3 frames plus a singleton when there is room, so every
  // label class appears.
  const auto Ti = static_cast<std::int64_t>(T);
  std::vector<Span> raw{{std::min<std::int64_t>(1, Ti - 1), std::min<std::int64_t>(3, Ti - 1)}};
  if (Ti >= 6) raw.push_back({Ti - 1, Ti - 1});
  const SpanSet spans = union_spans(raw);
  const auto labels = labels_from_spans(spans, Ti);
  std::vector<double> relevance(T, 0.1);
  for (const Span& s : spans.spans()) {
    for (auto t = s.begin; t <= s.end; ++t) relevance[static_cast<std::size_t>(t)] = 0.9;
  }
  const std::uint64_t noise_seed = rng.next_u64();

  LossFn<double> f = [&](ParamStore<double>& p, bool with_grad) {
    Graph<double> g(with_grad);
    auto out = bridge.forward(g, p, motion, query);
    Var loss = ag::cross_entropy_3class(g, out.logits, labels, {});
    if (setup.joint) {
      // Same noise on every call keeps f deterministic.
      Rng noise(noise_seed);
      auto samples = sample_k_spans(g, out.logits, setup.tau, setup.K, noise, false);
      for (const auto& s : samples) {
        Var l = ag::relevance_alignment_loss(g, s.mask, relevance);
        loss = ag::add(g, loss, ag::scale(g, l, 1.0 / static_cast<double>(setup.K)));
      }
    }
    if (with_grad) {
      p.zero_grad();
      g.backward(loss);
    }
    return g.value(loss)[0];
  };
  return finite_diff_check<double>(f, params, opts);
}

}  // namespace tgb
