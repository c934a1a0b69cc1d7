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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tgb/bootstrap.hpp"
#include "tgb/dataset.hpp"
#include "tgb/error.hpp"
#include "tgb/synth.hpp"

using namespace tgb;
namespace fs = std::filesystem;

namespace {

bool inside(const SpanSet& s, std::size_t t) {
  for (const auto& sp : s.spans())
    if (static_cast<std::int64_t>(t) >= sp.begin && static_cast<std::int64_t>(t) <= sp.end) return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("noiseless in-span descriptors point along the query direction") {
  SynthConfig cfg;
  cfg.num_examples = 20;
  for (const auto& ex : generate_examples(cfg)) {
    const auto u = query_signal_direction(cfg, ex.query.ids);
    for (std::size_t t = 0; t < ex.num_frames(); ++t) {
      if (!inside(ex.gold_spans, t)) continue;
      double dot = 0, n = 0;
      for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
        dot += ex.motion.values.at(t, j) * u[j];
        n += ex.motion.values.at(t, j) * ex.motion.values.at(t, j);
      }
      CHECK(dot / std::sqrt(n) >= 0.99);
      CHECK(ex.relevance[t] == 1.0);
    }
  }
}

TEST_CASE("examples are deterministic in seed and index") {
  SynthConfig cfg;
  cfg.noise_sigma = 0.3;
  const auto a = generate_example(cfg, 17);
  const auto b = generate_example(cfg, 17);
  CHECK(a.motion.values == b.motion.values);
  CHECK(a.query.ids == b.query.ids);
  CHECK(a.gold_spans == b.gold_spans);
  CHECK(a.relevance == b.relevance);
  CHECK(a.answer == b.answer);
  // Generation order does not matter.
  cfg.num_examples = 20;
  CHECK(generate_examples(cfg)[17].motion.values == a.motion.values);
  cfg.seed = 8;
  CHECK_FALSE(generate_example(cfg, 17).motion.values == a.motion.values);
}

TEST_CASE("gold spans are valid and separated across many draws") {
  SynthConfig cfg;
  cfg.min_frames = 14;  // 3 spans of 4 plus 2 gaps always fit
  cfg.max_frames = 40;
  cfg.min_span_length = 1;
  cfg.max_span_length = 4;
  cfg.feature_dim = 2;
  for (std::size_t i = 0; i < 10000; ++i) {
    const auto ex = generate_example(cfg, i);
    const auto T = static_cast<std::int64_t>(ex.num_frames());
    REQUIRE(ex.gold_spans.within(T));
    CHECK(ex.gold_spans.size() >= cfg.min_spans);
    CHECK(ex.gold_spans.size() <= cfg.max_spans);
    CHECK(union_spans(ex.gold_spans.spans()) == ex.gold_spans);
    CHECK(ex.query.ids.front() == kClsTokenId);
  }
}

TEST_CASE("infeasible packing and bad configs are rejected") {
  SynthConfig cfg;
  cfg.min_frames = cfg.max_frames = 4;
  cfg.min_spans = cfg.max_spans = 3;
  CHECK_THROWS_AS(generate_example(cfg, 0), ValidationError);
  cfg = SynthConfig{};
  cfg.min_frames = 10;
  cfg.max_frames = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.noise_sigma = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("mock oracle answers gold inside and disjoint distractors outside") {
  SynthConfig cfg;
  cfg.num_examples = 30;
  MockOracle oracle(cfg.world_seed);
  for (const auto& ex : generate_examples(cfg)) {
    for (std::size_t t = 0; t < ex.num_frames(); ++t) {
      const auto a = oracle.predict(ex, t);
      CHECK(a == oracle.predict(ex, t));
      if (inside(ex.gold_spans, t)) {
        CHECK(a == ex.answer);
        CHECK(oracle.correct(ex, t));
      } else {
        CHECK(token_f1_similarity(a, ex.answer) == 0.0);
        CHECK_FALSE(oracle.correct(ex, t));
      }
    }
    CHECK_THROWS_AS(oracle.predict(ex, ex.num_frames()), OracleError);
  }
}

TEST_CASE("noiseless bootstrap recovers every gold span") {
  SynthConfig cfg;
  cfg.num_examples = 100;
  cfg.max_spans = 1;
  MockOracle oracle(cfg.world_seed);
  for (const auto& ex : generate_examples(cfg)) {
    const auto r = pseudo_label_open_ended(ex, oracle, token_f1_similarity);
    REQUIRE(r.span.has_value());
    CHECK(union_spans({*r.span}) == ex.gold_spans);
  }
}

TEST_CASE("flip noise flips roughly that fraction of relevance") {
  SynthConfig cfg;
  cfg.num_examples = 200;
  cfg.noise_sigma = 0.1;
  std::size_t flipped = 0, total = 0;
  for (const auto& ex : generate_examples(cfg)) {
    for (std::size_t t = 0; t < ex.num_frames(); ++t) {
      flipped += (ex.relevance[t] >= 0.5) != inside(ex.gold_spans, t);
      ++total;
    }
  }
  CHECK(static_cast<double>(flipped) / total == doctest::Approx(0.1).epsilon(0.15));
}

TEST_CASE("written datasets are complete, byte-stable and load back") {
  testing::TempDir a("synth_a"), b("synth_b");
  SynthConfig cfg;
  cfg.num_examples = 10;
  const nlohmann::json resolved = {{"note", "x"}};
  const auto summary = write_dataset(cfg, a.path().string(), resolved);
  CHECK(summary.examples == 10);
  CHECK(summary.total_frames == 320);
  write_dataset(cfg, b.path().string(), resolved);

  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a.path() / "features")) {
    ++files;
    CHECK(slurp(e.path()) == slurp(b.path() / "features" / e.path().filename()));
  }
  CHECK(files == 10);
  CHECK(testing::lines_of(slurp(a.path() / "manifest.jsonl")).size() == 10);
  CHECK(slurp(a.path() / "manifest.jsonl") == slurp(b.path() / "manifest.jsonl"));

  const auto ds = load_dataset(a.path().string());
  REQUIRE(ds.examples.size() == 10);
  const auto fresh = generate_examples(cfg);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(ds.examples[i].motion.values == fresh[i].motion.values);
    CHECK(ds.examples[i].gold_spans == fresh[i].gold_spans);
    CHECK(ds.examples[i].query.ids == fresh[i].query.ids);
    CHECK(ds.splits[i] == split_name(split_of(cfg.seed, i)));
  }
  CHECK(ds.config == resolved);
}

TEST_CASE("split membership does not depend on the dataset size") {
  for (std::size_t i = 0; i < 500; ++i) CHECK(split_of(7, i) == split_of(7, i));
  testing::TempDir small("split_s"), large("split_l");
  SynthConfig cfg;
  cfg.num_examples = 20;
  write_dataset(cfg, small.path().string(), nullptr);
  cfg.num_examples = 40;
  write_dataset(cfg, large.path().string(), nullptr);
  const auto s = load_dataset(small.path().string());
  const auto l = load_dataset(large.path().string());
  for (std::size_t i = 0; i < 20; ++i) CHECK(s.splits[i] == l.splits[i]);
  std::size_t train = 0;
  for (std::size_t i = 0; i < 1000; ++i) train += split_of(7, i) == Split::kTrain;
  CHECK(train > 740);
  CHECK(train < 860);
}

TEST_CASE("feature files reject foreign and truncated input") {
  testing::TempDir d("feat");
  const auto path = d / "f.tgbf";
  Rng rng(1);
  const auto v = testing::random_tensor<float>({5, 3}, rng);
  write_feature_file(path, v);
  CHECK(read_feature_file(path) == v);

  auto bytes = slurp(path);
  {
    std::ofstream f(path, std::ios::binary);
    f << bytes.substr(0, bytes.size() - 4);
  }
  CHECK_THROWS_AS(read_feature_file(path), IoError);
  {
    std::ofstream f(path, std::ios::binary);
    bytes[0] = 'X';
    f << bytes;
  }
  try {
    read_feature_file(path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(path) != std::string::npos);
  }
}

TEST_CASE("pseudo labels round-trip and replace gold spans") {
  testing::TempDir d("labels");
  SynthConfig cfg;
  cfg.num_examples = 3;
  auto data = generate_examples(cfg);
  std::vector<PseudoLabelRecord> recs;
  recs.push_back({data[0].id, Span{1, 4}, 4.0, Provenance::kOpenEnded, false});
  recs.push_back({data[1].id, std::nullopt, 0.0, Provenance::kCloseEnded, true});
  write_pseudo_labels(d / "l.jsonl", recs);
  const auto back = read_pseudo_labels(d / "l.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].span == recs[0].span);
  CHECK(back[1].skip);
  CHECK(back[1].provenance == Provenance::kCloseEnded);

  CHECK(apply_pseudo_labels(data, back) == 1);
  CHECK(data[0].gold_spans.spans() == std::vector<Span>{{1, 4}});
  CHECK_FALSE(data[0].skip);
  CHECK(data[1].skip);
  CHECK(data[2].skip);
}

}  // TEST_SUITE
