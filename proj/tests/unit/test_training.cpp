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
#include <cmath>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tgb/error.hpp"
#include "tgb/gradcheck.hpp"
#include "tgb/log.hpp"
#include "tgb/synth.hpp"
#include "tgb/training.hpp"

using namespace tgb;

namespace {

BridgeConfig tiny_bridge() {
  BridgeConfig c;
  c.d_model = 16;
  c.heads = 2;
  c.layers = 2;
  c.ffn_mult = 2;
  return c;
}

std::vector<GroundingExample> synth_examples(std::size_t n, std::uint64_t seed = 7,
                                             std::size_t max_spans = 1) {
  SynthConfig s;
  s.num_examples = n;
  s.seed = seed;
  s.max_spans = max_spans;
  return generate_examples(s);
}

std::vector<const GroundingExample*> pointers(const std::vector<GroundingExample>& v) {
  std::vector<const GroundingExample*> out;
  for (const auto& e : v) out.push_back(&e);
  return out;
}

Tensor<double> spike_logits(std::size_t T, std::size_t b, std::size_t e, double height) {
  Tensor<double> l({T, 3});
  l.at(b, kBegin) = height;
  l.at(e, kEnd) = height;
  return l;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("gumbel argmax frequencies follow the softmax") {
  Rng rng(1);
  const std::vector<double> flat = {0.0, 0.0};
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += gumbel_softmax_sample<double>(flat, 1.0, rng).hard == 0;
  CHECK(std::abs(first / 10000.0 - 0.5) < 0.02);

  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> logits(5);
    for (auto& v : logits) v = rng.normal(0.0, 1.5);
    double z = 0;
    for (double v : logits) z += std::exp(v);
    std::vector<double> counts(5, 0.0);
    for (int i = 0; i < 10000; ++i) counts[gumbel_softmax_sample<double>(logits, 0.7, rng).hard] += 1;
    double tv = 0;
    for (std::size_t c = 0; c < 5; ++c) tv += std::abs(counts[c] / 10000.0 - std::exp(logits[c]) / z);
    CHECK(tv / 2 < 0.05);
  }
}

TEST_CASE("low temperature samples agree with the hard choice") {
  Rng rng(2);
  const std::vector<double> logits = {0.3, -0.4, 1.2};
  int near_one_hot = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto s = gumbel_softmax_sample<double>(logits, 0.01, rng);
    const auto arg = static_cast<std::size_t>(std::max_element(s.soft.begin(), s.soft.end()) - s.soft.begin());
    CHECK(arg == s.hard);
    double sum = 0;
    for (double v : s.soft) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    near_one_hot += 1.0 - s.soft[s.hard] <= 1e-3;
  }
  // Draws whose top two perturbed logits land within ~0.07 of each other stay
  // soft at this temperature; they are a small minority.
  CHECK(near_one_hot > 1800);
  CHECK_THROWS_AS(gumbel_softmax_sample<double>(logits, 0.0, rng), ValidationError);
}

TEST_CASE("straight-through gumbel is hard forward and soft backward") {
  Graph<double> g;
  Var l = g.leaf(Tensor<double>::vector({0.2, 1.0, -0.3}));
  const std::vector<double> noise = {0.0, 0.0, 0.0};
  Var y = ag::gumbel_softmax(g, l, noise, 1.0, true);
  CHECK(g.value(y) == Tensor<double>::vector({0, 1, 0}));
  Var s = ag::gumbel_softmax(g, l, noise, 1.0, false);
  CHECK(g.value(s)[1] < 1.0);
}

TEST_CASE("soft span mask of one-hot endpoints is the exact interval") {
  Graph<double> g(false);
  Var b = g.leaf(Tensor<double>::vector({0, 0, 1, 0, 0, 0}));
  Var e = g.leaf(Tensor<double>::vector({0, 0, 0, 0, 1, 0}));
  CHECK(g.value(ag::soft_span_mask(g, b, e)) == Tensor<double>::vector({0, 0, 1, 1, 1, 0}));
}

TEST_CASE("spiked logits sample their span") {
  Rng rng(3);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    Graph<double> g(false);
    Var l = g.leaf(spike_logits(10, 2, 5, 20.0));
    auto s = sample_k_spans(g, l, 0.01, 1, rng);
    REQUIRE(s.size() == 1);
    hits += s[0].span == Span{2, 5};
  }
  CHECK(hits > 990);
}

TEST_CASE("an end drawn before the begin swaps the pair") {
  Rng rng(4);
  Graph<double> g(false);
  Var l = g.leaf(spike_logits(10, 7, 3, 60.0));
  auto s = sample_k_spans(g, l, 0.5, 3, rng);
  for (const auto& x : s) {
    CHECK(x.span == Span{3, 7});
    const auto& m = g.value(x.mask);
    for (std::size_t t = 0; t < 10; ++t) CHECK(m[t] == doctest::Approx(t >= 3 && t <= 7 ? 1.0 : 0.0));
  }
}

TEST_CASE("the soft span path matches finite differences") {
  Rng init(5);
  const std::size_t T = 8;
  std::vector<double> relevance(T, 0.1);
  for (std::size_t t = 2; t <= 5; ++t) relevance[t] = 0.9;
  for (double tau : {1.0, 0.5}) {
    ParamStore<double> p;
    p.add("logits", testing::random_tensor<double>({T, 3}, init));
    LossFn<double> f = [&](ParamStore<double>& s, bool with_grad) {
      Graph<double> g(with_grad);
      Rng noise(99);  // identical noise on every evaluation
      auto samples = sample_k_spans(g, g.param(s, "logits"), tau, 2, noise, false);
      Var loss;
      for (const auto& x : samples) {
        Var l = ag::relevance_alignment_loss(g, x.mask, relevance);
        loss = loss.valid() ? ag::add(g, loss, l) : l;
      }
      if (with_grad) {
        s.zero_grad();
        g.backward(loss);
      }
      return g.value(loss)[0];
    };
    const auto r = finite_diff_check<double>(f, p);
    CHECK(r.passed(1e-3));
    double mag = 0;
    for (double v : p.grad("logits").values()) mag += std::abs(v);
    CHECK(mag > 0);
  }
}

TEST_CASE("relevance alignment loss is lowest on the relevant frames") {
  Graph<double> g(false);
  const std::vector<double> rel = {0.1, 0.9, 0.9, 0.1};
  Var good = g.leaf(Tensor<double>::vector({0, 1, 1, 0}));
  Var bad = g.leaf(Tensor<double>::vector({1, 0, 0, 1}));
  const double lg = g.value(ag::relevance_alignment_loss(g, good, rel))[0];
  const double lb = g.value(ag::relevance_alignment_loss(g, bad, rel))[0];
  CHECK(lg == doctest::Approx(-std::log(0.9)).epsilon(1e-5));
  CHECK(lb > lg);
}

TEST_CASE("overfitting one example lowers its loss") {
  auto data = synth_examples(1);
  TrainConfig tc;
  tc.joint = true;
  tc.lr = 3e-3;
  Trainer t(tiny_bridge(), tc);
  t.initialize();
  const double first = t.example_loss(data[0]);
  const auto batch = pointers(data);
  for (int i = 0; i < 200; ++i) t.train_step(batch);
  CHECK(t.example_loss(data[0]) < first);
  CHECK(t.step() == 200);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  auto data = synth_examples(4);
  TrainConfig tc;
  tc.lr = 0.0;
  tc.joint = true;
  Trainer t(tiny_bridge(), tc);
  t.initialize();
  const auto before = t.params().entries();
  t.train_step(pointers(data));
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(t.params().entry(i).value == before[i].value);
}

TEST_CASE("two runs from one seed give identical loss traces") {
  auto data = synth_examples(24);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 5;
  tc.joint = true;
  tc.class_weighting = true;
  auto run = [&] {
    Trainer t(tiny_bridge(), tc);
    t.initialize();
    std::vector<double> trace;
    t.fit(data, [&](const StepLog& s) { trace.push_back(s.loss); });
    return trace;
  };
  const auto a = run();
  CHECK(a.size() == 10);
  CHECK(a == run());
}

TEST_CASE("tau anneals linearly over the planned steps") {
  auto data = synth_examples(8);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 4;
  Trainer t(tiny_bridge(), tc);
  t.initialize();
  std::vector<double> taus;
  t.fit(data, [&](const StepLog& s) { taus.push_back(s.tau); });
  REQUIRE(taus.size() == 6);
  CHECK(t.planned_steps() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(taus[i] == doctest::Approx(1.0 - 0.9 * i / 5.0));
}

TEST_CASE("skipped examples are excluded and an empty batch is a warned no-op") {
  auto data = synth_examples(2);
  for (auto& e : data) e.skip = true;
  Trainer t(tiny_bridge(), TrainConfig{});
  t.initialize();
  const auto before = t.params().entries();
  std::vector<std::string> warnings;
  set_log_sink([&](std::string_view m) { warnings.emplace_back(m); });
  const double loss = t.train_step(pointers(data));
  set_log_sink(nullptr);
  CHECK(std::isnan(loss));
  CHECK(warnings.size() == 1);
  CHECK(t.step() == 0);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(t.params().entry(i).value == before[i].value);
}

TEST_CASE("non-finite inputs stop training with the step number") {
  auto data = synth_examples(1);
  data[0].motion.values[0] = std::numeric_limits<float>::infinity();
  Trainer t(tiny_bridge(), TrainConfig{});
  t.initialize();
  CHECK_THROWS_AS(t.train_step(pointers(data)), Error);
}

TEST_CASE("epoch losses do not climb on a small set") {
  auto data = synth_examples(32);
  TrainConfig tc;
  tc.epochs = 8;
  Trainer t(BridgeConfig{}, tc);
  t.initialize();
  const auto logs = t.fit(data);
  REQUIRE(logs.size() == 8);
  for (std::size_t i = 1; i < logs.size(); ++i) CHECK(logs[i].mean_loss <= logs[i - 1].mean_loss * 1.05);
}

TEST_CASE("random placement expected IoU matches Monte Carlo") {
  Rng rng(6);
  for (auto [T, L] : {std::pair<std::int64_t, std::int64_t>{32, 5}, {32, 1}, {10, 10}, {64, 12}}) {
    double total = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      const auto a = rng.uniform_int(0, T - L), b = rng.uniform_int(0, T - L);
      const double inter = static_cast<double>(std::max<std::int64_t>(0, L - std::abs(a - b)));
      total += inter / (2.0 * L - inter);
    }
    CHECK(random_placement_expected_iou(T, L) == doctest::Approx(total / n).epsilon(0.02));
  }
  CHECK(random_placement_expected_iou(10, 10) == 1.0);
}

TEST_CASE("an untrained model scores near random placement") {
  SynthConfig s;
  s.num_examples = 300;
  s.max_spans = 1;
  s.min_span_length = 6;
  s.max_span_length = 6;
  const auto data = generate_examples(s);
  Trainer t(BridgeConfig{}, TrainConfig{});
  t.initialize();
  const auto r = evaluate(data, t.bridge(), t.params(), 1);
  CHECK(r.metrics.miou < random_placement_expected_iou(32, 6) + 0.1);
}

TEST_CASE("evaluation is order independent and validates its input") {
  auto data = synth_examples(20, 3, 3);
  Trainer t(tiny_bridge(), TrainConfig{});
  t.initialize();
  const auto a = evaluate(data, t.bridge(), t.params(), 2);
  std::reverse(data.begin(), data.end());
  const auto b = evaluate(data, t.bridge(), t.params(), 2);
  CHECK(a.metrics.miou == doctest::Approx(b.metrics.miou).epsilon(1e-12));
  CHECK(a.predictions.size() == 20);

  CHECK_THROWS_AS(evaluate({}, t.bridge(), t.params(), 2), ValidationError);
  data[0].gold_spans = union_spans({{40, 50}});
  CHECK_THROWS_AS(evaluate(data, t.bridge(), t.params(), 2), ValidationError);
}

TEST_CASE("a model trained on its evaluation set fits it") {
  auto data = synth_examples(12, 5);
  TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 4;
  tc.lr = 3e-3;
  Trainer t(tiny_bridge(), tc);
  t.initialize();
  t.fit(data);
  CHECK(evaluate(data, t.bridge(), t.params(), 1).metrics.miou > 0.9);
}

TEST_CASE("inverse frequency weights have mean one and favour rare classes") {
  const auto data = synth_examples(20);
  const auto w = inverse_frequency_weights(data);
  REQUIRE(w.size() == 3);
  CHECK((w[0] + w[1] + w[2]) / 3 == doctest::Approx(1.0));
  CHECK(w[kNone] < w[kBegin]);
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.tau_end = 0.0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TrainConfig{};
  tc.K = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}

}  // TEST_SUITE
