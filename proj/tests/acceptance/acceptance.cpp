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

// Acceptance checks, one PASS/FAIL line per criterion.
//
//   tgb_acceptance [--only 1,7,8] [--work DIR]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "support/test_util.hpp"
#include "tgb/bootstrap.hpp"
#include "tgb/rope.hpp"
#include "tgb/spans.hpp"
#include "tgb/strategy.hpp"
#include "tgb/synth.hpp"
#include "tgb/training.hpp"

using namespace tgb;
using nlohmann::json;
using testing::lines_of;
using testing::run_cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

json cli_json(const std::vector<std::string>& args) {
  const auto r = run_cli(args);
  if (r.code != 0) {
    std::string joined;
    for (const auto& a : args) joined += a + " ";
    throw std::runtime_error("tgb " + joined + "exited " + std::to_string(r.code) + ": " + r.err);
  }
  return json::parse(lines_of(r.out).back());
}

fs::path g_work;

// --- 1 -----------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto r = run_cli({"gradcheck"});
  const auto lines = lines_of(r.out);
  if (lines.empty()) return {false, "no output: " + r.err};
  const auto summary = json::parse(lines.back());
  const double worst = summary["worst_rel_error"];
  const double secs = summary["seconds"];
  const bool ok = r.code == 0 && worst < 1e-3 && secs < 30.0;
  return {ok, fmt("%zu parameter groups, worst relative error %.2e, %.2f s",
                  static_cast<std::size_t>(summary["parameters"]), worst, secs)};
}

// --- 2 -----------------------------------------------------------------------
MaxSpanResult brute_force_span(const std::vector<double>& s) {
  MaxSpanResult best;
  best.area = -1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double lo = s[i];
    for (std::size_t j = i; j < s.size(); ++j) {
      lo = std::min(lo, s[j]);
      const double area = static_cast<double>(j - i + 1) * lo;
      if (area > best.area ||
          (area == best.area && static_cast<std::int64_t>(j - i + 1) > best.span.length())) {
        best.area = area;
        best.span = {static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)};
      }
    }
  }
  return best;
}

Outcome stack_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> s(static_cast<std::size_t>(rng.uniform_int(1, 64)));
    const bool coarse = i % 2 == 0;  // small integers exercise the tie-break
    for (auto& v : s) v = coarse ? static_cast<double>(rng.uniform_int(0, 5)) : rng.uniform();
    const auto a = max_span_monotonic_stack(s);
    const auto b = brute_force_span(s);
    mismatches += !(a.span == b.span && a.area == b.area);
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 5.0,
          fmt("%d mismatches over 1000 vectors, %.3f s", mismatches, secs)};
}

// --- 3 -----------------------------------------------------------------------
std::vector<bool> cover(const std::vector<Span>& spans, std::int64_t T) {
  std::vector<bool> b(static_cast<std::size_t>(T), false);
  for (const auto& s : spans)
    for (auto t = s.begin; t <= s.end; ++t) b[static_cast<std::size_t>(t)] = true;
  return b;
}

std::vector<Span> runs_of(const std::vector<bool>& b) {
  std::vector<Span> out;
  for (std::size_t t = 0; t < b.size(); ++t) {
    if (!b[t]) continue;
    const auto i = static_cast<std::int64_t>(t);
    if (!out.empty() && out.back().end + 1 == i) ++out.back().end;
    else out.push_back({i, i});
  }
  return out;
}

bool valid_set(const SpanSet& s, std::int64_t T) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& x = s.spans()[i];
    if (x.begin < 0 || x.end >= T || x.begin > x.end) return false;
    if (i > 0 && x.begin <= s.spans()[i - 1].end + 1) return false;
  }
  return true;
}

Outcome span_fuzz() {
  Rng rng(3);
  int union_bad = 0, roundtrip_bad = 0, decode_bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto T = rng.uniform_int(1, 64);
    std::vector<Span> raw(static_cast<std::size_t>(rng.uniform_int(0, 6)));
    for (auto& s : raw) {
      const auto a = rng.uniform_int(0, T - 1);
      s = {a, std::min(T - 1, a + rng.uniform_int(0, std::max<std::int64_t>(0, T / 4)))};
    }
    const auto u = union_spans(raw);
    union_bad += u.spans() != runs_of(cover(raw, T));
    const auto back = spans_from_labels(labels_from_spans(u, T));
    roundtrip_bad += cover(back.spans(), T) != cover(u.spans(), T);

    Tensor<float> logits({static_cast<std::size_t>(T), 3});
    for (auto& v : logits.values()) v = static_cast<float>(rng.normal(0.0, 3.0));
    const auto d = decode_spans(logits, static_cast<std::size_t>(rng.uniform_int(1, 4)));
    decode_bad += !valid_set(d, T) || d.empty();
  }
  return {union_bad + roundtrip_bad + decode_bad == 0,
          fmt("union mismatches %d, round-trip mismatches %d, invalid decodes %d (10000 lists)",
              union_bad, roundtrip_bad, decode_bad)};
}

// --- 4 -----------------------------------------------------------------------
Outcome rope_invariance() {
  Rng rng(4);
  const RopeConfig cfg{16, 10000.0};
  double worst_shift = 0, worst_norm = 0;
  auto enc = [&](const Tensor<double>& x, std::int64_t p) {
    const std::int64_t pos[] = {p};
    return rope_encode(x, std::span<const std::int64_t>(pos), cfg);
  };
  auto dot = [](const Tensor<double>& a, const Tensor<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    const auto q = testing::random_tensor<double>({1, 16}, rng);
    const auto k = testing::random_tensor<double>({1, 16}, rng);
    const auto m = rng.uniform_int(0, 1024), n = rng.uniform_int(0, 1024);
    const auto delta = rng.uniform_int(0, 4096);
    const double a = dot(enc(q, m), enc(k, n));
    const double b = dot(enc(q, m + delta), enc(k, n + delta));
    worst_shift = std::max(worst_shift, std::abs(a - b));
    const auto r = enc(q, m);
    worst_norm = std::max(worst_norm, std::abs(std::sqrt(dot(r, r)) - std::sqrt(dot(q, q))));
  }
  return {worst_shift < 1e-5 && worst_norm < 1e-5,
          fmt("max shift discrepancy %.2e, max norm change %.2e (1000 draws)", worst_shift,
              worst_norm)};
}

// --- 5 -----------------------------------------------------------------------
Outcome gumbel_statistics() {
  Rng rng(5);
  double worst_tv = 0;
  std::size_t cold_total = 0, cold_far = 0;
  double worst_gap = 0;
  for (int v = 0; v < 20; ++v) {
    std::vector<double> logits(static_cast<std::size_t>(rng.uniform_int(2, 8)));
    for (auto& x : logits) x = rng.normal(0.0, 1.5);
    double z = 0;
    for (double x : logits) z += std::exp(x);
    std::vector<double> counts(logits.size(), 0.0);
    for (int i = 0; i < 10000; ++i) counts[gumbel_softmax_sample<double>(logits, 1.0, rng).hard] += 1;
    double tv = 0;
    for (std::size_t c = 0; c < logits.size(); ++c) tv += std::abs(counts[c] / 1e4 - std::exp(logits[c]) / z);
    worst_tv = std::max(worst_tv, tv / 2);

    for (int i = 0; i < 10000; ++i) {
      const auto s = gumbel_softmax_sample<double>(logits, 0.01, rng);
      double dist = 0;
      for (std::size_t c = 0; c < s.soft.size(); ++c)
        dist = std::max(dist, std::abs(s.soft[c] - (c == s.hard ? 1.0 : 0.0)));
      ++cold_total;
      if (dist > 1e-3) ++cold_far;
      worst_gap = std::max(worst_gap, dist);
    }
  }
  const bool ok = worst_tv < 0.05 && cold_far == 0;
  return {ok, fmt("worst TV %.4f; at tau=0.01, %zu of %zu samples (%.2f%%) farther than 1e-3 "
                  "from one-hot, worst %.3f",
                  worst_tv, cold_far, cold_total, 100.0 * cold_far / cold_total, worst_gap)};
}

// --- 6 -----------------------------------------------------------------------
double bootstrap_miou(double flip) {
  SynthConfig cfg;
  cfg.num_examples = 200;
  cfg.max_spans = 1;
  cfg.noise_sigma = flip;
  MockOracle oracle(cfg.world_seed);
  std::vector<SpanSet> preds, golds;
  for (const auto& ex : generate_examples(cfg)) {
    const auto r = pseudo_label_open_ended(ex, oracle, token_f1_similarity);
    preds.push_back(r.span ? union_spans({*r.span}) : SpanSet{});
    golds.push_back(ex.gold_spans);
  }
  return evaluate_grounding(preds, golds).miou;
}

Outcome bootstrap_identifiability() {
  const double clean = bootstrap_miou(0.0);
  const double noisy = bootstrap_miou(0.1);
  return {clean == 1.0 && noisy >= 0.8,
          fmt("noiseless mIoU %.4f (need 1.0), 10%% flip mIoU %.4f (need >= 0.8)", clean, noisy)};
}

// --- 7 and 8 -----------------------------------------------------------------
// Regression floor: 0.763 held-out mIoU observed for the default pipeline,
// minus a 0.05 margin.
constexpr double kLearningFloor = 0.71;

struct Learned {
  std::string checkpoint;
  double miou = 0;
  double seconds = 0;
};

const Learned& learned_model() {
  static Learned model = [] {
    Learned m;
    const auto data = (g_work / "learn_data").string();
    const auto run = (g_work / "learn_run").string();
    cli_json({"synth", "--out", data, "--num-examples", "2000"});
    const auto t0 = std::chrono::steady_clock::now();
    cli_json({"train", "--data", data, "--out", run, "--quiet"});
    m.seconds = seconds_since(t0);
    m.checkpoint = run + "/last.tgbc";
    m.miou = cli_json({"eval", "--checkpoint", m.checkpoint, "--data", data, "--split", "test"})["mIoU"];
    return m;
  }();
  return model;
}

Outcome learning() {
  const auto& m = learned_model();
  return {m.miou >= kLearningFloor && m.seconds < 600.0,
          fmt("held-out mIoU %.4f (floor %.2f), training %.0f s", m.miou, kLearningFloor, m.seconds)};
}

double eval_at_length(const std::string& checkpoint, std::size_t T) {
  const auto scale = T / 32;
  const auto dir = (g_work / ("len" + std::to_string(T))).string();
  cli_json({"synth", "--out", dir, "--num-examples", "200", "--frames", std::to_string(T), "--seed",
            "99", "--set", "synth.min_span_length=" + std::to_string(3 * scale), "--set",
            "synth.max_span_length=" + std::to_string(8 * scale)});
  return cli_json({"eval", "--checkpoint", checkpoint, "--data", dir, "--split", "all"})["mIoU"];
}

Outcome length_extrapolation() {
  const auto& m = learned_model();
  const double base = eval_at_length(m.checkpoint, 32);
  const double t128 = eval_at_length(m.checkpoint, 128);
  const double t512 = eval_at_length(m.checkpoint, 512);
  const double drop = std::max(base - t128, base - t512);
  return {drop <= 0.15, fmt("mIoU T=32 %.4f, T=128 %.4f, T=512 %.4f, largest drop %.4f", base,
                            t128, t512, drop)};
}

// --- 9 -----------------------------------------------------------------------
Outcome strategy_ordering() {
  std::string detail;
  bool ok = true;
  for (std::size_t T : {64u, 256u}) {
    ScoreSuiteConfig cfg;
    cfg.num_frames = T;
    const auto suite = make_score_suite(cfg);
    const double multi = suite_miou(suite, GroundingStrategy::kMultiSpan, 3);
    detail += fmt("T=%zu multispan %.3f", T, multi);
    for (auto s : {GroundingStrategy::kSlidingWindow, GroundingStrategy::kProposal,
                   GroundingStrategy::kAnchor}) {
      const double b = suite_miou(suite, s, 3);
      ok = ok && multi > b;
      detail += fmt(", %s %.3f", std::string(grounding_strategy_name(s)).c_str(), b);
    }
    detail += "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// --- 10 ----------------------------------------------------------------------
Outcome complexity() {
  const auto report = (g_work / "bench.csv").string();
  const auto j = cli_json({"bench", "--report", report, "--strategies", "multispan,proposal"});
  const double multi = j["slopes"]["multispan"], prop = j["slopes"]["proposal"];
  return {multi < 1.2 && prop > 1.8,
          fmt("log-log slope multispan %.3f (need < 1.2), proposal %.3f (need > 1.8)", multi, prop)};
}

// --- 11 ----------------------------------------------------------------------
json pipeline(const fs::path& dir) {
  const auto data = (dir / "data").string(), labels = (dir / "labels.jsonl").string();
  const auto run = (dir / "run").string();
  cli_json({"synth", "--out", data, "--num-examples", "300", "--noise", "0.05"});
  cli_json({"bootstrap", "--data", data, "--out", labels});
  cli_json({"train", "--data", data, "--labels", labels, "--out", run, "--epochs", "3", "--quiet"});
  const auto r = run_cli({"eval", "--checkpoint", run + "/last.tgbc", "--data", data});
  if (r.code != 0) throw std::runtime_error("eval failed: " + r.err);
  return json::parse(r.out);
}

std::vector<std::string> step_lines(const std::string& out) {
  std::vector<std::string> v;
  for (const auto& line : lines_of(out))
    if (json::parse(line).contains("tau")) v.push_back(line);
  return v;
}

Outcome reproducibility() {
  const json a = pipeline(g_work / "pipe_a");
  const json b = pipeline(g_work / "pipe_b");
  const bool same_metrics = a.dump() == b.dump();

  const auto data = (g_work / "pipe_a" / "data").string();
  const std::vector<std::string> base = {"train", "--data", data, "--epochs", "4", "--set",
                                         "train.joint=true"};
  auto with = [&](std::vector<std::string> extra) {
    auto v = base;
    v.insert(v.end(), extra.begin(), extra.end());
    return v;
  };
  const auto full = run_cli(with({"--out", (g_work / "resume_full").string()}));
  const auto part = run_cli(with({"--out", (g_work / "resume_part").string(), "--stop-after", "2"}));
  const auto rest = run_cli({"train", "--data", data, "--out", (g_work / "resume_part").string(),
                             "--resume", (g_work / "resume_part" / "epoch_002.tgbc").string()});
  if (full.code != 0 || part.code != 0 || rest.code != 0) {
    return {false, "training exited " + std::to_string(full.code) + "/" + std::to_string(part.code) +
                       "/" + std::to_string(rest.code) + ": " + full.err + part.err + rest.err};
  }
  const auto uninterrupted = step_lines(full.out);
  auto resumed = step_lines(part.out);
  const auto tail = step_lines(rest.out);
  resumed.insert(resumed.end(), tail.begin(), tail.end());
  const bool same_trace = uninterrupted == resumed && !uninterrupted.empty();
  return {same_metrics && same_trace,
          fmt("pipeline metrics %s (mIoU %.4f); resumed trace %s over %zu steps",
              same_metrics ? "identical" : "DIFFER", a["mIoU"].get<double>(),
              same_trace ? "bit-identical" : "DIFFERS", uninterrupted.size())};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path work;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::cerr << "usage: tgb_acceptance [--only N[,N...]] [--work DIR]\n";
      return 2;
    }
  }
  const bool own_work = work.empty();
  if (own_work) {
    work = fs::temp_directory_path() / ("tgb_acceptance_" + std::to_string(::getpid()));
  }
  fs::create_directories(work);
  g_work = work;

  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness},
      {2, "monotonic stack equals brute force", stack_equivalence},
      {3, "span algebra fuzz", span_fuzz},
      {4, "RoPE relative-shift invariance", rope_invariance},
      {5, "Gumbel-Softmax statistics", gumbel_statistics},
      {6, "bootstrap identifiability", bootstrap_identifiability},
      {7, "learning", learning},
      {8, "length extrapolation", length_extrapolation},
      {9, "strategy ordering", strategy_ordering},
      {10, "decode complexity", complexity},
      {11, "reproducibility", reproducibility},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail
              << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
  }
  if (own_work) {
    std::error_code ec;
    fs::remove_all(work, ec);
  }
  return failures == 0 ? 0 : 1;
}
