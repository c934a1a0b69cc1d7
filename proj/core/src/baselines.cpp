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
#include <vector>

#include "tgb/error.hpp"
#include "tgb/spans.hpp"

namespace tgb {

BaselineStrategy parse_baseline_strategy(std::string_view name) {
  if (name == "sliding_window") return BaselineStrategy::kSlidingWindow;
  if (name == "proposal") return BaselineStrategy::kProposal;
  if (name == "anchor") return BaselineStrategy::kAnchor;
  throw ValidationError("unknown grounding strategy '" + std::string(name) + "'");
}

std::string_view baseline_strategy_name(BaselineStrategy s) {
  switch (s) {
    case BaselineStrategy::kSlidingWindow: return "sliding_window";
    case BaselineStrategy::kProposal: return "proposal";
    case BaselineStrategy::kAnchor: return "anchor";
  }
  return "unknown";
}

BaselineParams BaselineParams::defaults_for(std::int64_t num_frames) {
  BaselineParams p;
  for (std::int64_t div : {8, 4, 2}) {
    const std::int64_t len = std::max<std::int64_t>(1, num_frames / div);
    p.window_sizes.push_back(len);
    p.anchor_scales.push_back(len);
  }
  // Proposals shorter than the smallest window would let one noisy frame win.
  p.min_length = p.window_sizes.front();
  return p;
}

void BaselineParams::validate() const {
  for (auto w : window_sizes)
    if (w < 1) throw ValidationError("window sizes must be positive");
  for (auto a : anchor_scales)
    if (a < 1) throw ValidationError("anchor scales must be positive");
  if (min_length < 1) throw ValidationError("proposal min_length must be >= 1");
  if (max_length != 0 && max_length < min_length)
    throw ValidationError("proposal max_length below min_length");
}

namespace {

struct Best {
  double mean = 0.0;
  std::int64_t begin = -1;
  std::int64_t end = -1;

  void offer(double m, std::int64_t b, std::int64_t e) {
    if (begin < 0) {
      *this = {m, b, e};
      return;
    }
    const std::int64_t len = e - b + 1, best_len = end - begin + 1;
    if (m > mean || (m == mean && (len < best_len ||
                                   (len == best_len && b < begin)))) {
      *this = {m, b, e};
    }
  }
};

}  // namespace

SpanSet baseline_ground(std::span<const double> scores, BaselineStrategy strategy,
                        const BaselineParams& params) {
  params.validate();
  const auto t_len = static_cast<std::int64_t>(scores.size());
  if (t_len == 0) return SpanSet{};
  std::vector<double> prefix(scores.size() + 1, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) prefix[i + 1] = prefix[i] + scores[i];
  auto mean = [&](std::int64_t b, std::int64_t e) {
    return (prefix[static_cast<std::size_t>(e + 1)] - prefix[static_cast<std::size_t>(b)]) /
           static_cast<double>(e - b + 1);
  };

  Best best;
  switch (strategy) {
    case BaselineStrategy::kSlidingWindow: {
      if (params.window_sizes.empty())
        throw ValidationError("sliding_window needs at least one window size");
      for (auto w : params.window_sizes) {
        w = std::min(w, t_len);
        for (std::int64_t b = 0; b + w <= t_len; ++b) best.offer(mean(b, b + w - 1), b, b + w - 1);
      }
      break;
    }
    case BaselineStrategy::kProposal: {
      const std::int64_t lo = std::min(params.min_length, t_len);
      const std::int64_t hi =
          params.max_length == 0 ? t_len : std::min(params.max_length, t_len);
      for (std::int64_t b = 0; b < t_len; ++b)
        for (std::int64_t e = b + lo - 1; e < t_len && e - b + 1 <= hi; ++e)
          best.offer(mean(b, e), b, e);
      break;
    }
    case BaselineStrategy::kAnchor: {
      if (params.anchor_scales.empty())
        throw ValidationError("anchor needs at least one scale");
      for (std::int64_t c = 0; c < t_len; ++c) {
        for (auto s : params.anchor_scales) {
          const std::int64_t b = std::max<std::int64_t>(0, c - s / 2);
          const std::int64_t e = std::min(t_len - 1, c - s / 2 + s - 1);
          if (e < b) continue;
          best.offer(mean(b, e), b, e);
        }
      }
      break;
    }
  }
  if (best.begin < 0) return SpanSet{};
  return union_spans({{best.begin, best.end}});
}

Tensor<float> rc_logits_from_scores(std::span<const double> scores) {
  const std::size_t t_len = scores.size();
  Tensor<float> logits({t_len, 3});
  for (std::size_t t = 0; t < t_len; ++t) {
    const double prev = t == 0 ? 0.0 : scores[t - 1];
    const double next = t + 1 == t_len ? 0.0 : scores[t + 1];
    logits.at(t, kBegin) = static_cast<float>(scores[t] - prev);
    logits.at(t, kEnd) = static_cast<float>(scores[t] - next);
    logits.at(t, kNone) = 0.0f;
  }
  return logits;
}

}  // namespace tgb
