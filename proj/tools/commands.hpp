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

#ifndef TGB_TOOLS_COMMANDS_HPP_
#define TGB_TOOLS_COMMANDS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cli.hpp"
#include "json.hpp"
#include "tgb/config.hpp"

namespace tgb::cli {

// Options shared by commands that resolve a RunConfig.
struct ConfigOptions {
  std::string config_path;
  // "section.key=value", value parsed as JSON (bare words become strings).
  std::vector<std::string> sets;
};

struct SynthOptions {
  ConfigOptions cfg;
  std::string out;
  std::optional<std::size_t> num_examples;
  std::optional<std::size_t> frames;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
};

struct TrainOptions {
  ConfigOptions cfg;
  std::string data;
  std::string out;
  std::string resume;
  std::string labels;
  std::string split = "train";
  std::optional<std::size_t> epochs;
  // Stop after this many epochs in this invocation (the schedule still spans
  // train.epochs, so a later --resume continues it).
  std::optional<std::size_t> stop_after;
  bool quiet = false;
};

struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string report;
  std::string predictions;
  std::optional<std::size_t> k;
};

struct GroundOptions {
  std::string checkpoint;
  std::string data;
  std::string id;
  std::optional<std::size_t> k;
};

struct BootstrapOptions {
  ConfigOptions cfg;
  std::string data;
  std::string oracle = "mock";
  std::string mode = "open";
  std::string out;
  std::string split = "all";
  bool literal_pseudocode = false;
  std::size_t gap_tolerance = 0;
};

struct BenchOptions {
  std::string strategies = "multispan,sliding_window,proposal,anchor";
  std::string sizes = "256,512,1024,2048,4096,8192,16384";
  std::string report;
  std::size_t suite_examples = 8;
  std::size_t k = 3;
  double score_noise = 0.15;
  std::uint64_t seed = 11;
  // Minimum wall time per timing batch.
  double min_batch_ms = 5.0;
  std::size_t batches = 5;
};

struct GradcheckCmdOptions {
  ConfigOptions cfg;
  std::size_t frames = 6;
  std::size_t tokens = 4;
  std::uint64_t seed = 1;
  double tolerance = 1e-3;
  std::string fault = "none";
  bool no_joint = false;
};

// defaults < config file < typed flags (`flag_patch`) < --set < TGB_SEED.
RunConfig resolve_config(const ConfigOptions& opts, const nlohmann::json& flag_patch);

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err);
int cmd_ground(const GroundOptions& o, std::ostream& out, std::ostream& err);
int cmd_bootstrap(const BootstrapOptions& o, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckCmdOptions& o, std::ostream& out, std::ostream& err);

}  // namespace tgb::cli

#endif  // TGB_TOOLS_COMMANDS_HPP_
