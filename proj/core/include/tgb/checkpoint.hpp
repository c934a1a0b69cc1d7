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

#ifndef TGB_CHECKPOINT_HPP_
#define TGB_CHECKPOINT_HPP_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "tgb/bridge.hpp"
#include "tgb/optim.hpp"
#include "tgb/rng.hpp"
#include "tgb/tensor.hpp"

namespace tgb {

class Trainer;

// Binary layout, little-endian:
//   "TGBC", u16 version, u32 header length, header JSON
//   records [u16 name length, name, u8 rank, u32 dims[rank], f32 data]:
//     parameters, then Adam moments named "adam.m.<param>" / "adam.v.<param>"
//   4 x u64 RNG state
// The header holds {"config": ..., "state": {"step", "epoch", "planned_steps"}}.
inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr const char* kMomentPrefixM = "adam.m.";
inline constexpr const char* kMomentPrefixV = "adam.v.";

struct Checkpoint {
  nlohmann::json config;
  ParamStore<float> params;
  // Keyed by parameter name.
  std::unordered_map<std::string, Adam::Moments> moments;
  std::int64_t step = 0;
  std::size_t epoch = 0;
  std::int64_t planned_steps = 0;
  Rng::State rng{};
};

// Serializes to bytes; save_checkpoint writes them atomically (temp + rename).
std::string encode_checkpoint(const Checkpoint& ckpt);
// Throws CheckpointError for a bad magic, version, or malformed body.
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
// IoError when the file cannot be read, CheckpointError when it is malformed.
Checkpoint load_checkpoint(const std::string& path);

// Throws CheckpointError naming the first parameter that is missing, extra or
// differently shaped compared with a fresh `bridge` initialization.
void check_compatible(const ParamStore<float>& params, const Bridge<float>& bridge);

Checkpoint snapshot(Trainer& trainer, const nlohmann::json& config);
// Verifies compatibility, then installs parameters, moments, counters and RNG.
void restore(Trainer& trainer, const Checkpoint& ckpt);

}  // namespace tgb

#endif  // TGB_CHECKPOINT_HPP_
