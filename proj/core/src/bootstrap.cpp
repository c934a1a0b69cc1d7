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

#include "tgb/bootstrap.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include <json.hpp>

#include "tgb/error.hpp"
#include "tgb/log.hpp"

namespace tgb {

namespace {

std::vector<std::string> normalize_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else if (!std::ispunct(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace

double token_f1_similarity(std::string_view prediction, std::string_view gold) {
  const auto p = normalize_tokens(prediction);
  const auto g = normalize_tokens(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  int overlap = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

FrameScoreSeries score_frames(const GroundingExample& example,
                              const AnswerOracle& oracle, const SimilarityFn& sim) {
  FrameScoreSeries scores(example.num_frames(), 0.0);
  for (std::size_t t = 0; t < scores.size(); ++t) {
    try {
      scores[t] = std::clamp(sim(oracle.predict(example, t), example.answer), 0.0, 1.0);
    } catch (const OracleError& e) {
      log_warning("oracle failed on " + example.id + " frame " + std::to_string(t) +
                  ": " + e.what());
      scores[t] = 0.0;
    }
  }
  return scores;
}

MaxSpanResult max_span_monotonic_stack(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("max_span_monotonic_stack: empty scores");
  const auto n = static_cast<std::int64_t>(scores.size());
  MaxSpanResult best;
  bool have = false;
  std::vector<std::int64_t> stack;
  stack.reserve(scores.size());
  auto offer = [&](std::int64_t l, std::int64_t r, double height) {
    const double area = static_cast<double>(r - l + 1) * height;
    const std::int64_t width = r - l + 1;
    if (!have || area > best.area ||
        (area == best.area && (width > best.span.length() ||
                               (width == best.span.length() && l < best.span.begin)))) {
      best.span = {l, r};
      best.area = area;
      have = true;
    }
  };
  // i == n acts as a sentinel lower than every bar, flushing the stack.
  for (std::int64_t i = 0; i <= n; ++i) {
    while (!stack.empty() &&
           (i == n || scores[static_cast<std::size_t>(stack.back())] >
                          scores[static_cast<std::size_t>(i)])) {
      const std::int64_t top = stack.back();
      stack.pop_back();
      ++best.pops;
      const std::int64_t left = stack.empty() ? 0 : stack.back() + 1;
      offer(left, i - 1, scores[static_cast<std::size_t>(top)]);
    }
    if (i < n) {
      stack.push_back(i);
      ++best.pushes;
    }
  }
  return best;
}

MaxSpanResult max_span_literal_pseudocode(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("max_span_literal_pseudocode: empty scores");
  const auto n = static_cast<std::int64_t>(scores.size());
  MaxSpanResult out;
  double score_best = 0.0;
  std::int64_t start = 0, end = n - 1;
  std::vector<std::int64_t> stack;
  for (std::int64_t i = 0; i < n; ++i) {
    while (!stack.empty() && scores[static_cast<std::size_t>(stack.back())] >
                                 scores[static_cast<std::size_t>(i)]) {
      const std::int64_t tmp = stack.back();
      stack.pop_back();
      ++out.pops;
      const std::int64_t top = stack.empty() ? -1 : stack.back();
      const double score_tmp =
          static_cast<double>(i - top - 1) * scores[static_cast<std::size_t>(tmp)];
      if (score_tmp > score_best) {
        score_best = score_tmp;
        start = 0;
        end = i - 2;
      }
    }
    stack.push_back(i);
    ++out.pushes;
  }
  out.span = {start, std::max(start, end)};
  out.area = score_best;
  return out;
}

std::string_view provenance_name(Provenance p) {
  return p == Provenance::kOpenEnded ? "open_ended" : "close_ended";
}

Provenance parse_provenance(std::string_view name) {
  if (name == "open_ended") return Provenance::kOpenEnded;
  if (name == "close_ended") return Provenance::kCloseEnded;
  throw ValidationError("unknown provenance '" + std::string(name) + "'");
}

PseudoLabelRecord pseudo_label_open_ended(const GroundingExample& example,
                                          const AnswerOracle& oracle,
                                          const SimilarityFn& sim,
                                          const PseudoLabelOptions& opts) {
  PseudoLabelRecord rec;
  rec.id = example.id;
  rec.provenance = Provenance::kOpenEnded;
  if (example.num_frames() == 0) {
    rec.skip = true;
    return rec;
  }
  const auto scores = score_frames(example, oracle, sim);
  const bool any_positive =
      std::any_of(scores.begin(), scores.end(), [](double s) { return s > 0.0; });
  if (!any_positive) {
    rec.skip = true;
    return rec;
  }
  const auto best = opts.literal_pseudocode ? max_span_literal_pseudocode(scores)
                                            : max_span_monotonic_stack(scores);
  if (best.area <= 0.0) {
    rec.skip = true;
    return rec;
  }
  rec.span = best.span;
  rec.area = best.area;
  return rec;
}

CloseEndedLabels pseudo_label_close_ended(const GroundingExample& example,
                                          const AnswerOracle& oracle,
                                          std::size_t gap_tolerance) {
  CloseEndedLabels out;
  const std::size_t n = example.num_frames();
  std::vector<Span> runs;
  std::int64_t open = -1;
  for (std::size_t t = 0; t <= n; ++t) {
    const bool ok = t < n && oracle.correct(example, t);
    if (ok && open < 0) open = static_cast<std::int64_t>(t);
    if (!ok && open >= 0) {
      runs.push_back({open, static_cast<std::int64_t>(t) - 1});
      open = -1;
    }
  }
  // Join runs separated by short gaps.
  std::vector<Span> joined;
  for (const auto& r : runs) {
    if (!joined.empty() &&
        r.begin - joined.back().end - 1 <= static_cast<std::int64_t>(gap_tolerance) &&
        gap_tolerance > 0) {
      joined.back().end = r.end;
    } else {
      joined.push_back(r);
    }
  }
  for (const auto& r : joined) {
    PseudoLabelRecord rec;
    rec.id = example.id;
    rec.span = r;
    rec.area = static_cast<double>(r.length());
    rec.provenance = Provenance::kCloseEnded;
    out.records.push_back(rec);
  }
  out.skip = out.records.empty();
  return out;
}

SpanSet spans_from_records(std::span<const PseudoLabelRecord> records) {
  std::vector<Span> raw;
  for (const auto& r : records)
    if (!r.skip && r.span) raw.push_back(*r.span);
  return union_spans(std::move(raw));
}

ReplayOracle ReplayOracle::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open replay file '" + path + "'");
  ReplayOracle oracle;
  oracle.path_ = path;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("replay file '" + path + "' line " + std::to_string(lineno) +
                    ": " + e.what());
    }
    if (!j.contains("id") || !j["id"].is_string()) {
      throw IoError("replay file '" + path + "' line " + std::to_string(lineno) +
                    ": missing string \"id\"");
    }
    Entry e;
    if (j.contains("predictions")) {
      e.predictions = j["predictions"].get<std::vector<std::string>>();
      e.has_predictions = true;
    }
    if (j.contains("correct")) {
      for (const auto& v : j["correct"]) e.correct.push_back(v.get<bool>());
      e.has_correct = true;
    }
    oracle.entries_[j["id"].get<std::string>()] = std::move(e);
  }
  return oracle;
}

std::string ReplayOracle::predict(const GroundingExample& example,
                                  std::size_t frame) const {
  auto it = entries_.find(example.id);
  if (it == entries_.end() || frame >= it->second.predictions.size()) {
    throw OracleError("no replayed prediction for " + example.id + " frame " +
                      std::to_string(frame));
  }
  return it->second.predictions[frame];
}

bool ReplayOracle::correct(const GroundingExample& example, std::size_t frame) const {
  auto it = entries_.find(example.id);
  if (it == entries_.end() || frame >= it->second.correct.size()) {
    throw OracleError("no replayed correctness for " + example.id + " frame " +
                      std::to_string(frame));
  }
  return it->second.correct[frame];
}

void ReplayOracle::require_frames(const GroundingExample& example,
                                  bool open_ended) const {
  auto it = entries_.find(example.id);
  const std::size_t have =
      it == entries_.end()
          ? 0
          : (open_ended ? it->second.predictions.size() : it->second.correct.size());
  if (have < example.num_frames()) {
    throw IoError("replay file '" + path_ + "' covers " + std::to_string(have) +
                  " of " + std::to_string(example.num_frames()) + " frames for " +
                  example.id);
  }
}

}  // namespace tgb
