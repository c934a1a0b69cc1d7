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

#include <fstream>
#include <functional>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tgb/bootstrap.hpp"
#include "tgb/error.hpp"
#include "tgb/log.hpp"

using namespace tgb;

namespace {

GroundingExample example_with(std::size_t T, std::string answer, std::string id = "ex") {
  GroundingExample ex;
  ex.id = std::move(id);
  ex.motion.values = Tensor<float>({T, 2});
  ex.query = QueryTokens{{0, 1}, 4};
  ex.answer = std::move(answer);
  return ex;
}

class FnOracle final : public AnswerOracle {
 public:
  std::function<std::string(std::size_t)> answer;
  std::function<bool(std::size_t)> right = [](std::size_t) { return false; };
  std::string predict(const GroundingExample&, std::size_t t) const override { return answer(t); }
  bool correct(const GroundingExample&, std::size_t t) const override { return right(t); }
};

// O(T^2) maximizer with the same tie-break: larger area, then wider, then earlier.
MaxSpanResult brute_force(const std::vector<double>& s) {
  MaxSpanResult best;
  best.area = -1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double lo = s[i];
    for (std::size_t j = i; j < s.size(); ++j) {
      lo = std::min(lo, s[j]);
      const double area = static_cast<double>(j - i + 1) * lo;
      const auto w = static_cast<std::int64_t>(j - i + 1);
      if (area > best.area || (area == best.area && w > best.span.length())) {
        best.area = area;
        best.span = {static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)};
      }
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("bootstrap") {

TEST_CASE("token f1 examples") {
  CHECK(token_f1_similarity("red car", "a red car") == doctest::Approx(0.8));
  CHECK(token_f1_similarity("the dog", "the dog") == 1.0);
  CHECK(token_f1_similarity("Red, car!", "red car") == 1.0);
  CHECK(token_f1_similarity("blue", "red car") == 0.0);
  CHECK(token_f1_similarity("", "") == 1.0);
  CHECK(token_f1_similarity("", "red") == 0.0);
  // Multisets: one shared "a" out of two.
  CHECK(token_f1_similarity("a a", "a b") == doctest::Approx(0.5));
}

TEST_CASE("frame scores follow the oracle") {
  const auto ex = example_with(6, "red car");
  FnOracle gold;
  gold.answer = [](std::size_t) { return std::string("red car"); };
  for (double v : score_frames(ex, gold, token_f1_similarity)) CHECK(v == 1.0);
  FnOracle off;
  off.answer = [](std::size_t) { return std::string("purple elephant"); };
  for (double v : score_frames(ex, off, token_f1_similarity)) CHECK(v == 0.0);
}

TEST_CASE("an oracle failure scores zero and logs a warning") {
  const auto ex = example_with(4, "yes");
  FnOracle flaky;
  flaky.answer = [](std::size_t t) -> std::string {
    if (t == 2) throw OracleError("no answer");
    return "yes";
  };
  std::vector<std::string> warnings;
  set_log_sink([&](std::string_view m) { warnings.emplace_back(m); });
  const auto s = score_frames(ex, flaky, token_f1_similarity);
  set_log_sink(nullptr);
  CHECK(s == FrameScoreSeries{1, 1, 0, 1});
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("frame 2") != std::string::npos);
}

TEST_CASE("monotonic stack examples") {
  auto r = max_span_monotonic_stack(std::vector<double>{5});
  CHECK(r.span == Span{0, 0});
  CHECK(r.area == 5);
  r = max_span_monotonic_stack(std::vector<double>{1, 3, 3, 1});
  CHECK(r.span == Span{1, 2});
  CHECK(r.area == 6);
  r = max_span_monotonic_stack(std::vector<double>{2, 1, 2});
  CHECK(r.span == Span{0, 2});
  CHECK(r.area == 3);
  r = max_span_monotonic_stack(std::vector<double>{0, .9, .9, 0, .6, .6, .6, .6});
  CHECK(r.span == Span{4, 7});
  CHECK(r.area == doctest::Approx(2.4));
  CHECK_THROWS_AS(max_span_monotonic_stack(std::vector<double>{}), ValidationError);
}

TEST_CASE("monotonic stack equals brute force including ties") {
  Rng rng(1);
  for (int trial = 0; trial < 1500; ++trial) {
    const auto T = static_cast<std::size_t>(rng.uniform_int(1, 64));
    std::vector<double> s(T);
    const bool coarse = trial % 2 == 0;  // small integers force ties
    for (auto& v : s) v = coarse ? static_cast<double>(rng.uniform_int(0, 4)) : rng.uniform();
    const auto got = max_span_monotonic_stack(s);
    const auto want = brute_force(s);
    CHECK(got.span == want.span);
    CHECK(got.area == want.area);
    CHECK(got.pushes == T);
    CHECK(got.pops == T);
  }
}

TEST_CASE("raising a score never lowers the best area") {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const auto T = static_cast<std::size_t>(rng.uniform_int(1, 40));
    std::vector<double> s(T);
    for (auto& v : s) v = rng.uniform();
    const double before = max_span_monotonic_stack(s).area;
    s[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(T) - 1))] += rng.uniform();
    CHECK(max_span_monotonic_stack(s).area >= before);
  }
}

TEST_CASE("the literal pseudocode misplaces left edges") {
  const std::vector<double> s = {0, 0, 1, 1, 1, 0};
  CHECK(max_span_monotonic_stack(s).span == Span{2, 4});
  CHECK_FALSE(max_span_literal_pseudocode(s).span == Span{2, 4});
}

TEST_CASE("open-ended pseudo labels") {
  auto ex = example_with(12, "red car");
  FnOracle planted;
  planted.answer = [](std::size_t t) { return t >= 5 && t <= 9 ? "red car" : "nothing"; };
  const auto rec = pseudo_label_open_ended(ex, planted, token_f1_similarity);
  REQUIRE(rec.span.has_value());
  CHECK(*rec.span == Span{5, 9});
  CHECK(rec.area == 5.0);
  CHECK_FALSE(rec.skip);
  CHECK(rec.provenance == Provenance::kOpenEnded);
  const auto again = pseudo_label_open_ended(ex, planted, token_f1_similarity);
  CHECK(again.span == rec.span);
  CHECK(again.area == rec.area);

  FnOracle none;
  none.answer = [](std::size_t) { return std::string("zzz"); };
  const auto skipped = pseudo_label_open_ended(ex, none, token_f1_similarity);
  CHECK(skipped.skip);
  CHECK_FALSE(skipped.span.has_value());
}

TEST_CASE("close-ended runs") {
  auto ex = example_with(5, "yes");
  FnOracle o;
  const std::vector<bool> pattern = {false, true, true, false, true};
  o.right = [&](std::size_t t) { return pattern[t]; };
  auto r = pseudo_label_close_ended(ex, o);
  REQUIRE(r.records.size() == 2);
  CHECK(*r.records[0].span == Span{1, 2});
  CHECK(*r.records[1].span == Span{4, 4});
  CHECK(r.records[0].provenance == Provenance::kCloseEnded);
  CHECK(spans_from_records(r.records).spans() == std::vector<Span>{{1, 2}, {4, 4}});

  r = pseudo_label_close_ended(ex, o, 1);
  REQUIRE(r.records.size() == 1);
  CHECK(*r.records[0].span == Span{1, 4});

  o.right = [](std::size_t) { return true; };
  r = pseudo_label_close_ended(ex, o);
  REQUIRE(r.records.size() == 1);
  CHECK(*r.records[0].span == Span{0, 4});

  o.right = [](std::size_t) { return false; };
  r = pseudo_label_close_ended(ex, o);
  CHECK(r.records.empty());
  CHECK(r.skip);
}

TEST_CASE("provenance names round-trip") {
  for (auto p : {Provenance::kOpenEnded, Provenance::kCloseEnded})
    CHECK(parse_provenance(provenance_name(p)) == p);
  CHECK_THROWS_AS(parse_provenance("maybe"), ValidationError);
}

TEST_CASE("replay oracle reads per-frame outputs") {
  testing::TempDir dir("replay");
  const auto path = dir / "replay.jsonl";
  {
    std::ofstream f(path);
    f << R"({"id": "ex", "predictions": ["no", "red car", "red car"], "correct": [false, true, true]})" << "\n";
    f << R"({"id": "short", "predictions": ["a"]})" << "\n";
  }
  const auto oracle = ReplayOracle::load(path);
  const auto ex = example_with(3, "red car");
  CHECK(oracle.predict(ex, 1) == "red car");
  CHECK(oracle.correct(ex, 2));
  CHECK_NOTHROW(oracle.require_frames(ex, true));
  CHECK(score_frames(ex, oracle, token_f1_similarity) == FrameScoreSeries{0, 1, 1});

  const auto short_ex = example_with(3, "a", "short");
  CHECK_THROWS_AS(oracle.predict(short_ex, 2), OracleError);
  CHECK_THROWS_AS(oracle.require_frames(short_ex, true), IoError);
  CHECK_THROWS_AS(oracle.require_frames(short_ex, false), IoError);
  CHECK_THROWS_AS(oracle.predict(example_with(3, "a", "absent"), 0), OracleError);

  CHECK_THROWS_AS(ReplayOracle::load(dir / "missing.jsonl"), IoError);
  {
    std::ofstream f(dir / "bad.jsonl");
    f << "{not json\n";
  }
  CHECK_THROWS_AS(ReplayOracle::load(dir / "bad.jsonl"), IoError);
}

}  // TEST_SUITE
