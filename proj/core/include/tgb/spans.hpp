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

#ifndef TGB_SPANS_HPP_
#define TGB_SPANS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tgb/tensor.hpp"

namespace tgb {

// Inclusive frame interval.
struct Span {
  std::int64_t begin = 0;
  std::int64_t end = 0;

  std::int64_t length() const { return end - begin + 1; }
  friend bool operator==(const Span&, const Span&) = default;
};

// Sorted, pairwise disjoint, non-adjacent spans. Only union_spans and the
// decoders construct non-empty sets, so the invariant always holds.
class SpanSet {
 public:
  SpanSet() = default;

  const std::vector<Span>& spans() const { return spans_; }
  std::size_t size() const { return spans_.size(); }
  bool empty() const { return spans_.empty(); }
  std::int64_t covered_frames() const;
  // True when every span lies in [0, num_frames).
  bool within(std::int64_t num_frames) const;

  friend bool operator==(const SpanSet&, const SpanSet&) = default;

 private:
  friend SpanSet union_spans(std::vector<Span> raw);
  std::vector<Span> spans_;
};

// Class indices of the reading-comprehension head.
enum RcLabel : int { kBegin = 0, kEnd = 1, kNone = 2 };

using RcLabelSequence = std::vector<int>;

// Sorts by begin and merges spans that overlap or touch
// (next.begin <= current.end + 1). Throws ValidationError for a span with
// begin > end or a negative begin.
SpanSet union_spans(std::vector<Span> raw);

// Picks the k best positions on the BEGIN and END channels (per-position
// log-softmax score, earlier index wins ties), pairs each begin with the
// earliest unused end at or after it, keeps unmatched begins as single-frame
// spans, drops unmatched ends, and normalizes with union_spans.
// `logits` is T x 3 in [BEGIN, END, NONE] order; k is clamped to T.
SpanSet decode_spans(const Tensor<float>& logits, std::size_t k);

// Begin positions get BEGIN, end positions END, everything else NONE. A
// single-frame span only marks BEGIN.
RcLabelSequence labels_from_spans(const SpanSet& spans, std::int64_t num_frames);

// Left-to-right reading of a label sequence: BEGIN opens a span (closing any
// open one as a single frame), END closes the open span, and a span still open
// at the end becomes a single frame.
SpanSet spans_from_labels(std::span<const int> labels);

// |frames in both| / |frames in either|; two empty sets score 1.
double iou(const SpanSet& pred, const SpanSet& gold);

struct GroundingMetrics {
  double miou = 0.0;
  std::vector<double> thresholds;
  std::vector<double> recall_at;  // fraction of examples with IoU >= threshold
  std::vector<double> per_example;

  // Recall for an exact threshold value; throws if it was not evaluated.
  double at(double threshold) const;
};

GroundingMetrics evaluate_grounding(const std::vector<SpanSet>& preds,
                                    const std::vector<SpanSet>& golds,
                                    std::vector<double> thresholds = {0.3, 0.5});

// Fixed-span baselines of the strategy comparison.
enum class BaselineStrategy { kSlidingWindow, kProposal, kAnchor };

BaselineStrategy parse_baseline_strategy(std::string_view name);
std::string_view baseline_strategy_name(BaselineStrategy s);

struct BaselineParams {
  // Sliding-window lengths.
  std::vector<std::int64_t> window_sizes;
  // Proposal interval length bounds; max_length 0 means T.
  std::int64_t min_length = 1;
  std::int64_t max_length = 0;
  // Anchor lengths, centered on every position.
  std::vector<std::int64_t> anchor_scales;

  // Window sizes and anchor scales at T/8, T/4 and T/2; proposals of at
  // least T/8 frames.
  static BaselineParams defaults_for(std::int64_t num_frames);
  void validate() const;
};

// Top-1 interval by mean score. Ties prefer the shorter interval, then the
// earlier begin.
SpanSet baseline_ground(std::span<const double> scores, BaselineStrategy strategy,
                        const BaselineParams& params);

// RC-style logits from per-frame relevance: BEGIN scores the rise from the
// previous frame, END the drop to the next frame, NONE is zero.
Tensor<float> rc_logits_from_scores(std::span<const double> scores);

}  // namespace tgb

#endif  // TGB_SPANS_HPP_
