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

#ifndef TGB_BOOTSTRAP_HPP_
#define TGB_BOOTSTRAP_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tgb/error.hpp"
#include "tgb/example.hpp"
#include "tgb/spans.hpp"

namespace tgb {

using FrameScoreSeries = std::vector<double>;

// Raised by an oracle that cannot answer for a frame. score_frames records a
// zero score for that frame and keeps going.
class OracleError : public Error {
 public:
  using Error::Error;
};

// Frame-level answerer standing in for a frozen multimodal model. Answers are
// deterministic for a given (example, frame).
class AnswerOracle {
 public:
  virtual ~AnswerOracle() = default;
  // Open-ended answer produced from a single frame.
  virtual std::string predict(const GroundingExample& example,
                              std::size_t frame) const = 0;
  // Close-ended correctness for a single frame.
  virtual bool correct(const GroundingExample& example, std::size_t frame) const = 0;
};

// Replays precomputed per-frame outputs. JSONL, one object per example:
//   {"id": "...", "predictions": ["...", ...], "correct": [true, ...]}
// Either array may be absent; a missing frame raises OracleError.
class ReplayOracle final : public AnswerOracle {
 public:
  // Throws IoError naming the path when it cannot be read or parsed.
  static ReplayOracle load(const std::string& path);

  std::string predict(const GroundingExample& example,
                      std::size_t frame) const override;
  bool correct(const GroundingExample& example, std::size_t frame) const override;

  // Throws IoError when `example` lacks an entry for any of its frames in the
  // requested mode.
  void require_frames(const GroundingExample& example, bool open_ended) const;

 private:
  struct Entry {
    std::vector<std::string> predictions;
    std::vector<bool> correct;
    bool has_predictions = false;
    bool has_correct = false;
  };
  std::string path_;
  std::unordered_map<std::string, Entry> entries_;
};

using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

// Lowercases, strips punctuation, splits on whitespace and returns the F1 of
// the token multisets. Two empty strings score 1.
double token_f1_similarity(std::string_view prediction, std::string_view gold);

// Per-frame similarity between the oracle answer and the reference answer.
FrameScoreSeries score_frames(const GroundingExample& example,
                              const AnswerOracle& oracle, const SimilarityFn& sim);

struct MaxSpanResult {
  Span span;
  double area = 0.0;  // width * min(scores[span])
  // Instrumentation: each index is pushed and popped exactly once.
  std::size_t pushes = 0;
  std::size_t pops = 0;
};

// Contiguous span maximizing width * min score, in O(T) with one increasing
// stack. Ties prefer the wider span, then the earlier begin. Requires T >= 1.
MaxSpanResult max_span_monotonic_stack(std::span<const double> scores);

// The stack procedure exactly as printed in the original pseudo-label
// pseudocode: the start stays at 0 and the end becomes i - 2 whenever a better
// rectangle is popped, and bars still on the stack at the end are never
// scored. Kept only for comparison against max_span_monotonic_stack.
MaxSpanResult max_span_literal_pseudocode(std::span<const double> scores);

enum class Provenance { kOpenEnded, kCloseEnded };
std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view name);

struct PseudoLabelRecord {
  std::string id;
  std::optional<Span> span;  // empty when skipped
  double area = 0.0;
  Provenance provenance = Provenance::kOpenEnded;
  bool skip = false;
};

struct PseudoLabelOptions {
  // Use max_span_literal_pseudocode instead of the standard stack.
  bool literal_pseudocode = false;
};

// score_frames followed by the max-area span. All-zero scores yield a skipped
// record with no span.
PseudoLabelRecord pseudo_label_open_ended(const GroundingExample& example,
                                          const AnswerOracle& oracle,
                                          const SimilarityFn& sim,
                                          const PseudoLabelOptions& opts = {});

struct CloseEndedLabels {
  std::vector<PseudoLabelRecord> records;
  bool skip = false;  // no positive frame
};

// Maximal runs of correctly answered frames, one record each. Runs separated
// by at most `gap_tolerance` incorrect frames are joined.
CloseEndedLabels pseudo_label_close_ended(const GroundingExample& example,
                                          const AnswerOracle& oracle,
                                          std::size_t gap_tolerance = 0);

// Spans of all non-skipped records for `id`, normalized.
SpanSet spans_from_records(std::span<const PseudoLabelRecord> records);

}  // namespace tgb

#endif  // TGB_BOOTSTRAP_HPP_
