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

#include "tgb/config.hpp"

#include <cerrno>
#include <cstdlib>

#include "tgb/dataset.hpp"
#include "tgb/error.hpp"

namespace tgb {

using nlohmann::json;

namespace {

json bridge_json(const BridgeConfig& c) {
  return {{"d_model", c.d_model},
          {"heads", c.heads},
          {"layers", c.layers},
          {"ffn_mult", c.ffn_mult},
          {"feature_dim", c.feature_dim},
          {"vocab_size", c.vocab_size},
          {"max_k", c.max_k},
          {"dropout", c.dropout},
          {"rope_base", c.rope_base},
          {"conv_multiplier", c.conv_multiplier},
          {"mlp_head", c.mlp_head},
          {"grid_height", c.grid_height},
          {"grid_width", c.grid_width}};
}

json train_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"tau_start", c.tau_start},
          {"tau_end", c.tau_end},
          {"K", c.K},
          {"seed", c.seed},
          {"class_weighting", c.class_weighting},
          {"train_window", c.train_window},
          {"position_jitter", c.position_jitter},
          {"joint", c.joint},
          {"joint_weight", c.joint_weight},
          {"eval_k", c.eval_k}};
}

json synth_json(const SynthConfig& c) {
  return {{"num_examples", c.num_examples},
          {"min_frames", c.min_frames},
          {"max_frames", c.max_frames},
          {"feature_dim", c.feature_dim},
          {"min_spans", c.min_spans},
          {"max_spans", c.max_spans},
          {"min_span_length", c.min_span_length},
          {"max_span_length", c.max_span_length},
          {"vocab_size", c.vocab_size},
          {"query_tokens", c.query_tokens},
          {"noise_sigma", c.noise_sigma},
          {"signal_amplitude", c.signal_amplitude},
          {"background_sigma", c.background_sigma},
          {"seed", c.seed},
          {"world_seed", c.world_seed}};
}

// Recursively overlays `patch` onto `base`, rejecting keys absent from base
// and values whose JSON kind differs.
void overlay(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) {
    throw ConfigError("config " + (prefix.empty() ? std::string("root") : prefix) +
                      " must be an object");
  }
  for (const auto& [key, value] : patch.items()) {
    const std::string dotted = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + dotted + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, dotted);
      continue;
    }
    const bool both_numbers = slot.is_number() && value.is_number();
    if (!both_numbers && slot.type() != value.type()) {
      throw ConfigError("config key '" + dotted + "' expects " + slot.type_name() + ", got " +
                        value.type_name());
    }
    if (slot.is_number_unsigned() && !value.is_number_unsigned()) {
      throw ConfigError("config key '" + dotted + "' expects a non-negative integer");
    }
    if (slot.is_number_float()) {
      slot = value.get<double>();
    } else {
      slot = value;
    }
  }
}

template <typename T>
void read(const json& j, const char* section, const char* key, T& out) {
  try {
    out = j.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + section + "." + key + "': " + e.what());
  }
}

}  // namespace

json RunConfig::to_json() const {
  return {{"bridge", bridge_json(bridge)},
          {"train", train_json(train)},
          {"synth", synth_json(synth)},
          {"paths", {{"data", paths.data}, {"out", paths.out}, {"labels", paths.labels}}}};
}

RunConfig RunConfig::merged(const json& patch) const {
  json full = to_json();
  overlay(full, patch, "");
  RunConfig c;
#define TGB_READ(sec, field) read(full, #sec, #field, c.sec.field)
  TGB_READ(bridge, d_model);
  TGB_READ(bridge, heads);
  TGB_READ(bridge, layers);
  TGB_READ(bridge, ffn_mult);
  TGB_READ(bridge, feature_dim);
  TGB_READ(bridge, vocab_size);
  TGB_READ(bridge, max_k);
  TGB_READ(bridge, dropout);
  TGB_READ(bridge, rope_base);
  TGB_READ(bridge, conv_multiplier);
  TGB_READ(bridge, mlp_head);
  TGB_READ(bridge, grid_height);
  TGB_READ(bridge, grid_width);
  TGB_READ(train, epochs);
  TGB_READ(train, batch_size);
  TGB_READ(train, lr);
  TGB_READ(train, beta1);
  TGB_READ(train, beta2);
  TGB_READ(train, adam_eps);
  TGB_READ(train, tau_start);
  TGB_READ(train, tau_end);
  TGB_READ(train, K);
  TGB_READ(train, seed);
  TGB_READ(train, class_weighting);
  TGB_READ(train, train_window);
  TGB_READ(train, position_jitter);
  TGB_READ(train, joint);
  TGB_READ(train, joint_weight);
  TGB_READ(train, eval_k);
  TGB_READ(synth, num_examples);
  TGB_READ(synth, min_frames);
  TGB_READ(synth, max_frames);
  TGB_READ(synth, feature_dim);
  TGB_READ(synth, min_spans);
  TGB_READ(synth, max_spans);
  TGB_READ(synth, min_span_length);
  TGB_READ(synth, max_span_length);
  TGB_READ(synth, vocab_size);
  TGB_READ(synth, query_tokens);
  TGB_READ(synth, noise_sigma);
  TGB_READ(synth, signal_amplitude);
  TGB_READ(synth, background_sigma);
  TGB_READ(synth, seed);
  TGB_READ(synth, world_seed);
  TGB_READ(paths, data);
  TGB_READ(paths, out);
  TGB_READ(paths, labels);
#undef TGB_READ
  return c;
}

RunConfig RunConfig::from_json(const json& j) { return RunConfig{}.merged(j); }

void RunConfig::validate() const {
  try {
    bridge.validate();
    synth.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  train.validate();
  if (bridge.feature_dim != synth.feature_dim) {
    throw ConfigError("bridge.feature_dim (" + std::to_string(bridge.feature_dim) +
                      ") differs from synth.feature_dim (" +
                      std::to_string(synth.feature_dim) + ")");
  }
  if (bridge.vocab_size < synth.vocab_size) {
    throw ConfigError("bridge.vocab_size (" + std::to_string(bridge.vocab_size) +
                      ") is smaller than synth.vocab_size (" +
                      std::to_string(synth.vocab_size) + ")");
  }
}

RunConfig load_run_config(const std::string& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  // Reports and checkpoints wrap the config under "config".
  if (j.is_object() && j.size() == 1 && j.contains("config")) j = j["config"];
  return RunConfig::from_json(j);
}

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("TGB_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (errno != 0 || *end != '\0' || *v == '-') {
    throw ConfigError(std::string("TGB_SEED must be an unsigned integer, got '") + v + "'");
  }
  return static_cast<std::uint64_t>(s);
}

void apply_seed_override(RunConfig& cfg, std::optional<std::uint64_t> seed) {
  if (!seed) return;
  cfg.train.seed = *seed;
  cfg.synth.seed = *seed;
}

}  // namespace tgb
