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
#include "json.hpp"
#include "support/test_util.hpp"
#include "tgb/bridge.hpp"
#include "tgb/gradcheck.hpp"

using namespace tgb;
using nlohmann::json;
using testing::lines_of;
using testing::run_cli;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

// A small bridge so end-to-end runs take well under a second per epoch.
const std::vector<std::string> kTiny = {
    "--set", "bridge.d_model=16", "--set", "bridge.heads=2", "--set", "bridge.layers=2",
    "--set", "bridge.ffn_mult=2", "--set", "train.batch_size=8"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

json last_json(const std::string& out) { return json::parse(lines_of(out).back()); }

void make_data(const TempDir& d, const std::string& name, std::size_t n,
               std::vector<std::string> extra = {}) {
  auto r = run_cli(cat({"synth", "--out", d / name, "--num-examples", std::to_string(n)}, extra));
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({"synth", "--help"}).code == 0);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"synth"}).code == 2);  // --out is required
}

TEST_CASE("synth writes a dataset and reruns byte-identically") {
  TempDir d("cli_synth");
  auto r = run_cli({"synth", "--out", d / "data", "--num-examples", "10"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["examples"] == 10);
  CHECK(fs::exists(d.path() / "data" / "manifest.jsonl"));
  const auto manifest = slurp(d.path() / "data" / "manifest.jsonl");
  const auto meta = slurp(d.path() / "data" / "manifest.jsonl.meta.json");
  CHECK(json::parse(meta).contains("config"));
  REQUIRE(run_cli({"synth", "--out", d / "data", "--num-examples", "10"}).code == 0);
  CHECK(slurp(d.path() / "data" / "manifest.jsonl") == manifest);
  CHECK(slurp(d.path() / "data" / "manifest.jsonl.meta.json") == meta);
}

TEST_CASE("unwritable output is an I/O error naming the path") {
  TempDir d("cli_io");
  { std::ofstream(d / "blocker") << "x"; }
  const auto target = d / "blocker/data";
  auto r = run_cli({"synth", "--out", target, "--num-examples", "2"});
  CHECK(r.code == 3);
  CHECK(r.err.find(d / "blocker") != std::string::npos);
  CHECK(run_cli({"train", "--data", d / "nowhere", "--out", d / "run"}).code == 3);
}

TEST_CASE("config errors exit 2 with the offending key") {
  TempDir d("cli_cfg");
  auto r = run_cli({"synth", "--out", d / "x", "--set", "synth.bogus=1"});
  CHECK(r.code == 2);
  CHECK(r.err.find("synth.bogus") != std::string::npos);
  r = run_cli({"synth", "--out", d / "x", "--set", "synth.num_examples=\"many\""});
  CHECK(r.code == 2);
  CHECK(r.err.find("synth.num_examples") != std::string::npos);
  CHECK(run_cli({"synth", "--out", d / "x", "--set", "novalue"}).code == 2);
  { std::ofstream(d / "bad.json") << "{\"train\": {\"lr\": -1}}"; }
  CHECK(run_cli({"synth", "--out", d / "x", "--config", d / "bad.json"}).code == 2);
  CHECK(run_cli({"synth", "--out", d / "x", "--config", d / "absent.json"}).code == 3);
}

TEST_CASE("train lowers the loss, eval decodes at most k spans, and bad checkpoints exit 5") {
  TempDir d("cli_train");
  make_data(d, "data", 40);
  auto r = run_cli(cat({"train", "--data", d / "data", "--out", d / "run", "--epochs", "4",
                        "--split", "all"},
                       kTiny));
  REQUIRE(r.code == 0);
  std::vector<double> epoch_means;
  std::size_t steps = 0;
  for (const auto& line : lines_of(r.out)) {
    const auto j = json::parse(line);
    if (j.contains("mean_loss")) epoch_means.push_back(j["mean_loss"]);
    if (j.contains("tau")) ++steps;
  }
  REQUIRE(epoch_means.size() == 4);
  CHECK(epoch_means.back() < epoch_means.front());
  CHECK(steps == 20);
  CHECK(last_json(r.out)["done"] == true);
  CHECK(fs::exists(d.path() / "run" / "last.tgbc"));
  CHECK(fs::exists(d.path() / "run" / "epoch_004.tgbc"));
  CHECK(json::parse(slurp(d.path() / "run" / "train_summary.json")).contains("config"));

  const auto ck = d / "run/last.tgbc";
  for (int k : {1, 2}) {
    const auto preds = d / ("p" + std::to_string(k) + ".jsonl");
    r = run_cli({"eval", "--checkpoint", ck, "--data", d / "data", "--split", "all", "--k",
                 std::to_string(k), "--predictions", preds, "--report", d / "report.json"});
    REQUIRE(r.code == 0);
    const auto metrics = json::parse(r.out);
    CHECK(metrics.contains("mIoU"));
    for (const auto& line : lines_of(slurp(preds))) {
      const auto spans = json::parse(line)["pred_spans"];
      CHECK(spans.size() >= 1);
      CHECK(spans.size() <= static_cast<std::size_t>(k));
      std::int64_t prev_end = -2;
      for (const auto& s : spans) {
        CHECK(s[0].get<std::int64_t>() > prev_end + 1);
        CHECK(s[0].get<std::int64_t>() <= s[1].get<std::int64_t>());
        prev_end = s[1];
      }
    }
    const auto report = json::parse(slurp(d.path() / "report.json"));
    CHECK(report.contains("config"));
    CHECK(report["metrics"] == metrics);
  }
  // Evaluation is deterministic.
  const auto a = run_cli({"eval", "--checkpoint", ck, "--data", d / "data"});
  CHECK(a.out == run_cli({"eval", "--checkpoint", ck, "--data", d / "data"}).out);

  r = run_cli({"ground", "--checkpoint", ck, "--data", d / "data", "--id", "ex000003", "--k", "2"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["id"] == "ex000003");
  CHECK(json::parse(r.out)["num_frames"] == 32);
  CHECK(run_cli({"ground", "--checkpoint", ck, "--data", d / "data", "--id", "nope"}).code == 2);

  auto bytes = slurp(ck);
  bytes[0] = 'Z';
  { std::ofstream(d / "bad.tgbc", std::ios::binary) << bytes; }
  r = run_cli({"eval", "--checkpoint", d / "bad.tgbc", "--data", d / "data"});
  CHECK(r.code == 5);
  { std::ofstream(d / "short.tgbc", std::ios::binary) << slurp(ck).substr(0, 100); }
  CHECK(run_cli({"eval", "--checkpoint", d / "short.tgbc", "--data", d / "data"}).code == 5);
  CHECK(run_cli({"eval", "--checkpoint", d / "absent.tgbc", "--data", d / "data"}).code == 3);
}

TEST_CASE("resuming mid-run reproduces the uninterrupted loss trace") {
  TempDir d("cli_resume");
  make_data(d, "data", 30);
  const auto base = cat({"train", "--data", d / "data", "--epochs", "4", "--split", "all",
                         "--set", "train.joint=true"},
                        kTiny);
  auto full = run_cli(cat(base, {"--out", d / "full"}));
  REQUIRE(full.code == 0);
  auto first = run_cli(cat(base, {"--out", d / "part", "--stop-after", "2"}));
  REQUIRE(first.code == 0);
  CHECK(last_json(first.out)["done"] == false);
  auto rest = run_cli({"train", "--data", d / "data", "--split", "all", "--out", d / "part",
                       "--resume", d / "part/epoch_002.tgbc"});
  REQUIRE(rest.code == 0);

  auto step_lines = [](const std::string& out) {
    std::vector<std::string> v;
    for (const auto& line : lines_of(out))
      if (json::parse(line).contains("tau")) v.push_back(line);
    return v;
  };
  const auto a = step_lines(full.out);
  auto b = step_lines(first.out);
  const auto c = step_lines(rest.out);
  b.insert(b.end(), c.begin(), c.end());
  CHECK(a.size() == 16);
  CHECK(a == b);
  CHECK(slurp(d.path() / "full/last.tgbc") == slurp(d.path() / "part/last.tgbc"));
}

TEST_CASE("a model trained on its own split fits it") {
  TempDir d("cli_overfit");
  make_data(d, "data", 12, {"--set", "synth.max_spans=1"});
  auto r = run_cli(cat({"train", "--data", d / "data", "--out", d / "run", "--epochs", "60",
                        "--split", "all", "--quiet", "--set", "train.lr=0.003", "--set",
                        "train.batch_size=4"},
                       {kTiny.begin(), kTiny.end() - 2}));
  REQUIRE(r.code == 0);
  r = run_cli({"eval", "--checkpoint", d / "run/last.tgbc", "--data", d / "data", "--split",
               "all", "--k", "1"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["mIoU"].get<double>() > 0.9);
}

TEST_CASE("bootstrap labels noiseless data and feeds training") {
  TempDir d("cli_boot");
  make_data(d, "data", 30, {"--set", "synth.max_spans=1"});
  auto r = run_cli({"bootstrap", "--data", d / "data", "--out", d / "labels.jsonl"});
  REQUIRE(r.code == 0);
  const auto stats = json::parse(r.out);
  CHECK(stats["labeled"] == 30);
  CHECK(stats["skipped"] == 0);
  CHECK(stats["miou_vs_gold"].get<double>() == 1.0);
  CHECK(lines_of(slurp(d.path() / "labels.jsonl")).size() == 30);

  r = run_cli(cat({"train", "--data", d / "data", "--labels", d / "labels.jsonl", "--out",
                   d / "run", "--epochs", "1", "--quiet"},
                  kTiny));
  CHECK(r.code == 0);

  r = run_cli({"bootstrap", "--data", d / "data", "--out", d / "c.jsonl", "--mode", "closed"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["labeled"] == 30);
}

TEST_CASE("replayed all-wrong answers skip every example in closed mode") {
  TempDir d("cli_replay");
  make_data(d, "data", 6);
  std::string replay;
  for (int i = 0; i < 6; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "ex%06d", i);
    replay += json{{"id", id}, {"correct", std::vector<bool>(32, false)}}.dump() + "\n";
  }
  { std::ofstream(d / "replay.jsonl") << replay; }
  auto r = run_cli({"bootstrap", "--data", d / "data", "--out", d / "l.jsonl", "--mode", "closed",
                    "--oracle", "replay:" + (d / "replay.jsonl")});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["skipped"] == 6);
  for (const auto& line : lines_of(slurp(d.path() / "l.jsonl"))) CHECK(json::parse(line)["skip"] == true);

  // Open mode needs predictions the file does not have.
  r = run_cli({"bootstrap", "--data", d / "data", "--out", d / "o.jsonl", "--oracle",
               "replay:" + (d / "replay.jsonl")});
  CHECK(r.code == 3);
  CHECK(run_cli({"bootstrap", "--data", d / "data", "--out", d / "o.jsonl", "--oracle", "psychic"})
            .code == 2);
}

TEST_CASE("bench writes the exact CSV header") {
  TempDir d("cli_bench");
  auto r = run_cli({"bench", "--report", d / "bench.csv", "--sizes", "64,128", "--suite-examples",
                    "2", "--batches", "1", "--min-batch-ms", "0.1"});
  REQUIRE(r.code == 0);
  const auto rows = lines_of(slurp(d.path() / "bench.csv"));
  REQUIRE(rows.size() == 9);
  CHECK(rows[0] == "strategy,T,wall_ns,peak_bytes,miou");
  CHECK(json::parse(r.out).contains("slopes"));
  CHECK(run_cli({"bench", "--report", d / "b.csv", "--strategies", "beam"}).code == 2);
}

TEST_CASE("gradcheck passes, lists each group once, and flags a corrupted backward") {
  auto r = run_cli({"gradcheck"});
  REQUIRE(r.code == 0);
  const auto lines = lines_of(r.out);
  std::vector<std::string> names;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) names.push_back(json::parse(lines[i])["parameter"]);
  CHECK(names == Bridge<double>(BridgeGradCheckSetup::tiny().bridge).parameter_names());
  CHECK(last_json(r.out)["passed"] == true);

  r = run_cli({"gradcheck", "--fault", "matmul_rhs"});
  CHECK(r.code == 6);
  CHECK_FALSE(r.err.empty());
  r = run_cli({"gradcheck", "--fault", "layer_norm_gain"});
  CHECK(r.code == 6);
  CHECK(r.err.find(".gain") != std::string::npos);
  CHECK(run_cli({"gradcheck"}).code == 0);  // the hook was reset
  CHECK(run_cli({"gradcheck", "--fault", "cosmic_ray"}).code == 2);
}

TEST_CASE("TGB_SEED overrides every seed") {
  TempDir d("cli_seed");
  ::setenv("TGB_SEED", "123", 1);
  auto r = run_cli({"synth", "--out", d / "a", "--num-examples", "3", "--seed", "9"});
  ::unsetenv("TGB_SEED");
  REQUIRE(r.code == 0);
  const auto meta = json::parse(slurp(d.path() / "a" / "manifest.jsonl.meta.json"));
  CHECK(meta["config"]["synth"]["seed"] == 123);
  CHECK(meta["config"]["train"]["seed"] == 123);
}

}  // TEST_SUITE
