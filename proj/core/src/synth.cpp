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

#include "tgb/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "tgb/error.hpp"

namespace tgb {

namespace {

constexpr std::array<const char*, 24> kAnswerWords = {
    "red",    "car",     "dog",    "jumps",  "ball",   "kitchen",
    "guitar", "running", "green",  "bridge", "opens",  "door",
    "child",  "waves",   "bottle", "pours",  "horse",  "river",
    "yellow", "kite",    "climbs", "ladder", "throws", "frisbee"};
// Disjoint from kAnswerWords so token-F1 against any reference is zero.
constexpr std::array<const char*, 24> kDistractorWords = {
    "blue",    "truck",  "cat",    "sleeps", "chair",  "garden",
    "piano",   "sitting", "purple", "tunnel", "closes", "window",
    "adult",   "nods",   "cup",    "spills", "cow",    "lake",
    "orange",  "balloon", "falls",  "stairs", "catches", "hat"};

std::uint64_t string_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> token_direction(std::uint64_t world_seed, int token,
                                    std::size_t dim) {
  Rng rng(hash_combine(world_seed ^ 0x746f6b656e646972ULL,
                       static_cast<std::uint64_t>(token)));
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.normal();
  return v;
}

std::string answer_for_query(std::uint64_t world_seed, const std::vector<int>& ids) {
  std::uint64_t h = world_seed ^ 0x616e73776572ULL;
  for (int id : ids) h = hash_combine(h, static_cast<std::uint64_t>(id));
  Rng rng(h);
  const auto a = rng.uniform_int(0, kAnswerWords.size() - 1);
  auto b = rng.uniform_int(0, kAnswerWords.size() - 2);
  if (b >= a) ++b;
  return std::string(kAnswerWords[static_cast<std::size_t>(a)]) + " " +
         kAnswerWords[static_cast<std::size_t>(b)];
}

}  // namespace

void SynthConfig::validate() const {
  if (num_examples == 0) throw ConfigError("synth.num_examples must be positive");
  if (min_frames < 1 || max_frames < min_frames)
    throw ConfigError("synth frame range is empty");
  if (feature_dim < 1) throw ConfigError("synth.feature_dim must be positive");
  if (max_spans < min_spans) throw ConfigError("synth span-count range is empty");
  if (min_span_length < 1 || max_span_length < min_span_length)
    throw ConfigError("synth span-length range is empty");
  if (vocab_size < 2) throw ConfigError("synth.vocab_size must be >= 2");
  if (query_tokens < 1) throw ConfigError("synth.query_tokens must be >= 1");
  if (noise_sigma < 0.0) throw ConfigError("synth.noise_sigma must be >= 0");
  if (background_sigma < 0.0) throw ConfigError("synth.background_sigma must be >= 0");
}

std::vector<double> query_signal_direction(const SynthConfig& cfg,
                                           const std::vector<int>& token_ids) {
  std::vector<double> u(cfg.feature_dim, 0.0);
  for (std::size_t i = 1; i < token_ids.size(); ++i) {
    const auto v = token_direction(cfg.world_seed, token_ids[i], cfg.feature_dim);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] += v[j];
  }
  double norm = 0.0;
  for (double x : u) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    u.assign(cfg.feature_dim, 0.0);
    u[0] = 1.0;
    return u;
  }
  for (auto& x : u) x /= norm;
  return u;
}

GroundingExample generate_example(const SynthConfig& cfg, std::size_t index) {
  cfg.validate();
  Rng rng(hash_combine(cfg.seed, static_cast<std::uint64_t>(index)));
  GroundingExample ex;
  char id[32];
  std::snprintf(id, sizeof(id), "ex%06zu", index);
  ex.id = id;

  const auto t_len = static_cast<std::int64_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.min_frames),
                      static_cast<std::int64_t>(cfg.max_frames)));
  const auto n_spans = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.min_spans),
                      static_cast<std::int64_t>(cfg.max_spans)));
  std::vector<std::int64_t> lengths(n_spans);
  std::int64_t used = 0;
  for (auto& len : lengths) {
    len = rng.uniform_int(static_cast<std::int64_t>(cfg.min_span_length),
                          static_cast<std::int64_t>(cfg.max_span_length));
    used += len;
  }
  // Spans are separated by at least one background frame.
  const std::int64_t required = used + (n_spans > 0 ? static_cast<std::int64_t>(n_spans) - 1 : 0);
  if (required > t_len) {
    throw ValidationError("cannot pack " + std::to_string(n_spans) +
                          " spans of total length " + std::to_string(used) +
                          " into " + std::to_string(t_len) + " frames");
  }
  // Distribute the slack over n+1 gaps (stars and bars).
  const std::int64_t slack = t_len - required;
  std::vector<std::int64_t> cuts(n_spans);
  for (auto& c : cuts) c = rng.uniform_int(0, slack);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Span> spans;
  std::int64_t cursor = 0, prev_cut = 0;
  for (std::size_t i = 0; i < n_spans; ++i) {
    cursor += cuts[i] - prev_cut;
    prev_cut = cuts[i];
    spans.push_back({cursor, cursor + lengths[i] - 1});
    cursor += lengths[i] + 1;
  }
  ex.gold_spans = union_spans(spans);

  ex.query.vocab_size = cfg.vocab_size;
  ex.query.ids.push_back(kClsTokenId);
  for (std::size_t i = 0; i < cfg.query_tokens; ++i) {
    ex.query.ids.push_back(static_cast<int>(
        rng.uniform_int(1, static_cast<std::int64_t>(cfg.vocab_size) - 1)));
  }
  const auto u = query_signal_direction(cfg, ex.query.ids);
  ex.answer = answer_for_query(cfg.world_seed, ex.query.ids);

  const auto t_frames = static_cast<std::size_t>(t_len);
  std::vector<bool> inside(t_frames, false);
  for (const auto& s : ex.gold_spans.spans())
    for (auto t = s.begin; t <= s.end; ++t) inside[static_cast<std::size_t>(t)] = true;

  ex.motion.values = Tensor<float>({t_frames, cfg.feature_dim});
  ex.relevance.assign(t_frames, 0.0);
  const double flip_p = std::min(cfg.noise_sigma, 0.5);
  for (std::size_t t = 0; t < t_frames; ++t) {
    for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
      const double v = inside[t]
                           ? cfg.signal_amplitude * u[j] + rng.normal(0.0, cfg.noise_sigma)
                           : rng.normal(0.0, cfg.background_sigma);
      ex.motion.values.at(t, j) = static_cast<float>(v);
    }
    const bool flip = flip_p > 0.0 && rng.uniform() < flip_p;
    ex.relevance[t] = (inside[t] != flip) ? 1.0 : 0.0;
  }
  return ex;
}

std::vector<GroundingExample> generate_examples(const SynthConfig& cfg) {
  std::vector<GroundingExample> out;
  out.reserve(cfg.num_examples);
  for (std::size_t i = 0; i < cfg.num_examples; ++i) out.push_back(generate_example(cfg, i));
  return out;
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_of(std::uint64_t seed, std::size_t index) {
  const auto bucket =
      hash_combine(seed ^ 0x73706c6974ULL, static_cast<std::uint64_t>(index)) % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kVal : Split::kTest;
}

std::string MockOracle::predict(const GroundingExample& example,
                                std::size_t frame) const {
  if (frame >= example.relevance.size()) {
    throw OracleError("frame " + std::to_string(frame) + " out of range for " +
                      example.id);
  }
  if (example.relevance[frame] >= 0.5) return example.answer;
  Rng rng(hash_combine(hash_combine(world_seed_, string_hash(example.id)),
                       static_cast<std::uint64_t>(frame)));
  const auto a = rng.uniform_int(0, kDistractorWords.size() - 1);
  const auto b = rng.uniform_int(0, kDistractorWords.size() - 1);
  return std::string(kDistractorWords[static_cast<std::size_t>(a)]) + " " +
         kDistractorWords[static_cast<std::size_t>(b)];
}

bool MockOracle::correct(const GroundingExample& example, std::size_t frame) const {
  if (frame >= example.relevance.size()) {
    throw OracleError("frame " + std::to_string(frame) + " out of range for " +
                      example.id);
  }
  return example.relevance[frame] >= 0.5;
}

}  // namespace tgb
