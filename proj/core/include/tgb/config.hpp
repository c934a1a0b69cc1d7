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

#ifndef TGB_CONFIG_HPP_
#define TGB_CONFIG_HPP_

#include <optional>
#include <string>

#include "json.hpp"
#include "tgb/bridge.hpp"
#include "tgb/synth.hpp"
#include "tgb/training.hpp"

namespace tgb {

// Every tunable of a run. Serialized in full into checkpoints and reports.
struct RunConfig {
  BridgeConfig bridge;
  TrainConfig train;
  SynthConfig synth;
  struct Paths {
    std::string data;
    std::string out;
    // Pseudo-label JSONL used instead of gold spans when training.
    std::string labels;
  } paths;

  nlohmann::json to_json() const;
  // Overlays `j` onto the defaults. Unknown keys and type mismatches raise
  // ConfigError naming the dotted key.
  static RunConfig from_json(const nlohmann::json& j);
  // Applies `patch` (same shape as to_json) on top of this config.
  RunConfig merged(const nlohmann::json& patch) const;
  void validate() const;
};

// Parses a JSON config file over the defaults. IoError when unreadable,
// ConfigError when malformed.
RunConfig load_run_config(const std::string& path);

// Reads TGB_SEED; when set, replaces train.seed and synth.seed. ConfigError
// when the value is not an unsigned integer.
std::optional<std::uint64_t> seed_from_env();
void apply_seed_override(RunConfig& cfg, std::optional<std::uint64_t> seed);

}  // namespace tgb

#endif  // TGB_CONFIG_HPP_
