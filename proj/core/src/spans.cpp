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

#include "tgb/spans.hpp"

#include <algorithm>
#include <cmath>

#include "tgb/error.hpp"
#include "tgb/kernels.hpp"

namespace tgb {

std::int64_t SpanSet::covered_frames() const {
  std::int64_t n = 0;
  for (const auto& s : spans_) n += s.length();
  return n;
}

bool SpanSet::within(std::int64_t num_frames) const {
  return std::all_of(spans_.begin(), spans_.end(), [&](const Span& s) {
    return s.begin >= 0 && s.end < num_frames;
  });
}

SpanSet union_spans(std::vector<Span> raw) {
  for (const auto& s : raw) {
    if (s.begin < 0 || s.begin > s.end) {
      throw ValidationError("invalid span [" + std::to_string(s.begin) + ", " +
                            std::to_string(s.end) + "]");
    }
  }
  std::sort(raw.begin(), raw.end(), [](const Span& a, const Span& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  SpanSet out;
  for (const auto& s : raw) {
    if (!out.spans_.empty() && s.begin <= out.spans_.back().end + 1) {
      out.spans_.back().end = std::max(out.spans_.back().end, s.end);
    } else {
      out.spans_.push_back(s);
    }
  }
  return out;
}

namespace {

// Keeps the k best (score, index) pairs seen so far; ties go to the earlier
// index. A bounded heap avoids the O(T) buffers a full selection would need.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  void offer(float score, std::int64_t index) {
    if (heap_.size() < k_) {
      heap_.push_back({score, index});
      std::push_heap(heap_.begin(), heap_.end(), worse_on_top);
    } else if (better(score, index, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), worse_on_top);
      heap_.back() = {score, index};
      std::push_heap(heap_.begin(), heap_.end(), worse_on_top);
    }
  }

  // Kept indices in ascending order.
  std::vector<std::int64_t> positions() const {
    std::vector<std::int64_t> out;
    out.reserve(heap_.size());
    for (const auto& e : heap_) out.push_back(e.index);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Entry {
    float score;
    std::int64_t index;
  };
  static bool better(float score, std::int64_t index, const Entry& e) {
    return score != e.score ? score > e.score : index < e.index;
  }
  // Heap order that puts the worst kept entry at the front.
  static bool worse_on_top(const Entry& a, const Entry& b) { return better(a.score, a.index, b); }

  std::size_t k_;
  std::vector<Entry> heap_;
};

}  // namespace

SpanSet decode_spans(const Tensor<float>& logits, std::size_t k) {
  if (k < 1) throw ValidationError("decode_spans: k must be at least 1");
  if (logits.rank() != 2 || logits.dim(1) != 3) {
    throw DimensionError("decode_spans expects Tx3 logits, got " +
                         shape_to_string(logits.shape()));
  }
  const std::size_t t_len = logits.dim(0);
  if (t_len == 0) return SpanSet{};
  k = std::min(k, t_len);
  TopK top_begin(k), top_end(k);
  for (std::size_t t = 0; t < t_len; ++t) {
    const auto row = logits.row(t);
    const float lse = kernels::log_sum_exp<float>(row);
    const auto i = static_cast<std::int64_t>(t);
    top_begin.offer(row[kBegin] - lse, i);
    top_end.offer(row[kEnd] - lse, i);
  }
  const auto begins = top_begin.positions();
  const auto ends = top_end.positions();

  std::vector<Span> raw;
  raw.reserve(k);
  std::vector<bool> used(ends.size(), false);
  std::size_t cursor = 0;  // first end that could still match
  for (const auto b : begins) {
    while (cursor < ends.size() && (used[cursor] || ends[cursor] < b)) ++cursor;
    if (cursor < ends.size()) {
      used[cursor] = true;
      raw.push_back({b, ends[cursor]});
    } else {
      raw.push_back({b, b});
    }
  }
  return union_spans(std::move(raw));
}

RcLabelSequence labels_from_spans(const SpanSet& spans, std::int64_t num_frames) {
  if (num_frames < 0) throw ValidationError("negative frame count");
  RcLabelSequence labels(static_cast<std::size_t>(num_frames), kNone);
  for (const auto& s : spans.spans()) {
    if (s.begin < 0 || s.end >= num_frames) {
      throw ValidationError("span [" + std::to_string(s.begin) + ", " +
                            std::to_string(s.end) + "] outside [0, " +
                            std::to_string(num_frames) + ")");
    }
    labels[static_cast<std::size_t>(s.begin)] = kBegin;
    if (s.end > s.begin) labels[static_cast<std::size_t>(s.end)] = kEnd;
  }
  return labels;
}

SpanSet spans_from_labels(std::span<const int> labels) {
  std::vector<Span> raw;
  std::int64_t open = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto t = static_cast<std::int64_t>(i);
    if (labels[i] == kBegin) {
      if (open >= 0) raw.push_back({open, open});
      open = t;
    } else if (labels[i] == kEnd && open >= 0) {
      raw.push_back({open, t});
      open = -1;
    }
  }
  if (open >= 0) raw.push_back({open, open});
  return union_spans(std::move(raw));
}

double iou(const SpanSet& pred, const SpanSet& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  const auto& a = pred.spans();
  const auto& b = gold.spans();
  std::int64_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const std::int64_t lo = std::max(a[i].begin, b[j].begin);
    const std::int64_t hi = std::min(a[i].end, b[j].end);
    if (lo <= hi) inter += hi - lo + 1;
    if (a[i].end < b[j].end) ++i; else ++j;
  }
  const std::int64_t uni = pred.covered_frames() + gold.covered_frames() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double GroundingMetrics::at(double threshold) const {
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    if (thresholds[i] == threshold) return recall_at[i];
  throw ValidationError("threshold " + std::to_string(threshold) +
                        " was not evaluated");
}

GroundingMetrics evaluate_grounding(const std::vector<SpanSet>& preds,
                                    const std::vector<SpanSet>& golds,
                                    std::vector<double> thresholds) {
  if (preds.empty()) throw ValidationError("evaluate_grounding: empty dataset");
  if (preds.size() != golds.size()) {
    throw ValidationError("evaluate_grounding: " + std::to_string(preds.size()) +
                          " predictions for " + std::to_string(golds.size()) +
                          " references");
  }
  GroundingMetrics m;
  m.thresholds = std::move(thresholds);
  m.recall_at.assign(m.thresholds.size(), 0.0);
  m.per_example.reserve(preds.size());
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double v = iou(preds[i], golds[i]);
    m.per_example.push_back(v);
    total += v;
    for (std::size_t t = 0; t < m.thresholds.size(); ++t)
      if (v >= m.thresholds[t]) m.recall_at[t] += 1.0;
  }
  const auto n = static_cast<double>(preds.size());
  m.miou = total / n;
  for (auto& r : m.recall_at) r /= n;
  return m;
}

}  // namespace tgb
