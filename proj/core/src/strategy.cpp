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

#include "tgb/strategy.hpp"

#include <algorithm>

#include "tgb/error.hpp"
#include "tgb/rng.hpp"

namespace tgb {

GroundingStrategy parse_grounding_strategy(std::string_view name) {
  if (name == "multispan") return GroundingStrategy::kMultiSpan;
  if (name == "sliding_window") return GroundingStrategy::kSlidingWindow;
  if (name == "proposal") return GroundingStrategy::kProposal;
  if (name == "anchor") return GroundingStrategy::kAnchor;
  throw ValidationError("unknown strategy '" + std::string(name) +
                        "' (expected multispan, sliding_window, proposal or anchor)");
}

std::string_view grounding_strategy_name(GroundingStrategy s) {
  switch (s) {
    case GroundingStrategy::kMultiSpan: return "multispan";
    case GroundingStrategy::kSlidingWindow: return "sliding_window";
    case GroundingStrategy::kProposal: return "proposal";
    case GroundingStrategy::kAnchor: return "anchor";
  }
  return "?";
}

std::vector<GroundingStrategy> all_grounding_strategies() {
  return {GroundingStrategy::kMultiSpan, GroundingStrategy::kSlidingWindow,
          GroundingStrategy::kProposal, GroundingStrategy::kAnchor};
}

SpanSet ground_scores(std::span<const double> scores, GroundingStrategy strategy,
                      std::size_t k, const BaselineParams& params) {
  switch (strategy) {
    case GroundingStrategy::kMultiSpan:
      if (scores.empty()) return SpanSet{};
      return decode_spans(rc_logits_from_scores(scores), k);
    case GroundingStrategy::kSlidingWindow:
      return baseline_ground(scores, BaselineStrategy::kSlidingWindow, params);
    case GroundingStrategy::kProposal:
      return baseline_ground(scores, BaselineStrategy::kProposal, params);
    case GroundingStrategy::kAnchor:
      return baseline_ground(scores, BaselineStrategy::kAnchor, params);
  }
  return SpanSet{};
}

std::vector<ScoreSuiteItem> make_score_suite(const ScoreSuiteConfig& cfg) {
  if (cfg.num_frames == 0 || cfg.min_spans == 0 || cfg.min_spans > cfg.max_spans) {
    throw ValidationError("score suite needs T >= 1 and 1 <= min_spans <= max_spans");
  }
  const auto T = static_cast<std::int64_t>(cfg.num_frames);
  const std::int64_t lo = std::max<std::int64_t>(1, T / 16);
  const std::int64_t hi = std::max<std::int64_t>(lo, T / 6);
  std::vector<ScoreSuiteItem> out;
  out.reserve(cfg.num_examples);
  for (std::size_t i = 0; i < cfg.num_examples; ++i) {
    Rng rng(hash_combine(cfg.seed, i));
    const auto n = rng.uniform_int(static_cast<std::int64_t>(cfg.min_spans),
                                   static_cast<std::int64_t>(cfg.max_spans));
    std::vector<std::int64_t> lengths(static_cast<std::size_t>(n));
    std::int64_t used = n - 1;
    for (auto& l : lengths) used += (l = rng.uniform_int(lo, hi));
    if (used > T) {
      throw ValidationError("score suite: " + std::to_string(n) + " spans do not fit in " +
                            std::to_string(T) + " frames");
    }
    // Stars and bars over the free frames.
    const std::int64_t slack = T - used;
    std::vector<std::int64_t> cuts(static_cast<std::size_t>(n));
    for (auto& c : cuts) c = rng.uniform_int(0, slack);
    std::sort(cuts.begin(), cuts.end());
    std::vector<Span> spans;
    std::int64_t cursor = 0, prev_cut = 0;
    for (std::size_t s = 0; s < lengths.size(); ++s) {
      cursor += cuts[s] - prev_cut;
      prev_cut = cuts[s];
      spans.push_back({cursor, cursor + lengths[s] - 1});
      cursor += lengths[s] + 1;
    }
    ScoreSuiteItem item;
    item.gold = union_spans(spans);
    item.scores.assign(cfg.num_frames, 0.0);
    for (const Span& s : spans) {
      for (auto t = s.begin; t <= s.end; ++t) item.scores[static_cast<std::size_t>(t)] = 1.0;
    }
    for (double& v : item.scores) v = std::clamp(v + rng.normal(0.0, cfg.score_noise), 0.0, 1.0);
    out.push_back(std::move(item));
  }
  return out;
}

double suite_miou(const std::vector<ScoreSuiteItem>& suite, GroundingStrategy strategy,
                  std::size_t k) {
  if (suite.empty()) throw ValidationError("suite_miou: empty suite");
  std::vector<SpanSet> preds, golds;
  for (const auto& item : suite) {
    const auto params = BaselineParams::defaults_for(static_cast<std::int64_t>(item.scores.size()));
    preds.push_back(ground_scores(item.scores, strategy, k, params));
    golds.push_back(item.gold);
  }
  return evaluate_grounding(preds, golds).miou;
}

}  // namespace tgb
