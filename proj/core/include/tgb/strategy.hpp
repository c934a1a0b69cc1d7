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

#ifndef TGB_STRATEGY_HPP_
#define TGB_STRATEGY_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgb/spans.hpp"

namespace tgb {

// Span decoders compared on identical per-frame relevance scores.
enum class GroundingStrategy { kMultiSpan, kSlidingWindow, kProposal, kAnchor };

// "multispan", "sliding_window", "proposal", "anchor"; ValidationError otherwise.
GroundingStrategy parse_grounding_strategy(std::string_view name);
std::string_view grounding_strategy_name(GroundingStrategy s);
std::vector<GroundingStrategy> all_grounding_strategies();

// multispan: rc_logits_from_scores then decode_spans(k). The baselines ignore
// k and return their top-1 interval.
SpanSet ground_scores(std::span<const double> scores, GroundingStrategy strategy,
                      std::size_t k, const BaselineParams& params);

struct ScoreSuiteConfig {
  std::size_t num_frames = 64;
  std::size_t num_examples = 100;
  std::size_t min_spans = 2;
  std::size_t max_spans = 3;
  // Span lengths drawn in [T / 16, T / 6] (at least 1 frame).
  double score_noise = 0.15;
  std::uint64_t seed = 11;
};

struct ScoreSuiteItem {
  std::vector<double> scores;
  SpanSet gold;
};

// Relevance 1 inside planted spans and 0 outside, plus Gaussian noise clipped
// to [0, 1]. Spans are separated by at least one frame.
std::vector<ScoreSuiteItem> make_score_suite(const ScoreSuiteConfig& cfg);

// Mean IoU of one strategy over a suite.
double suite_miou(const std::vector<ScoreSuiteItem>& suite, GroundingStrategy strategy,
                  std::size_t k);

}  // namespace tgb

#endif  // TGB_STRATEGY_HPP_
