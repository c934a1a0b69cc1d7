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

#ifndef TGB_DATASET_HPP_
#define TGB_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgb/bootstrap.hpp"
#include "tgb/example.hpp"
#include "tgb/synth.hpp"
#include "tgb/tensor.hpp"

namespace tgb {

// Feature file: "TGBF", u16 version, u32 T, u32 D, T*D f32, all little-endian.
inline constexpr std::uint16_t kFeatureFormatVersion = 1;

void write_feature_file(const std::string& path, const Tensor<float>& values);
// Throws IoError (naming the path) for unreadable, truncated or foreign files.
Tensor<float> read_feature_file(const std::string& path);

struct DatasetSummary {
  std::size_t examples = 0;
  std::size_t total_frames = 0;
  std::map<std::string, std::size_t> splits;

  nlohmann::json to_json() const;
};

// Generates the synthetic set into `dir`: manifest.jsonl, features/<id>.tgbf
// and manifest.meta.json holding `config` and the summary. Reruns with the same
// inputs produce byte-identical files.
DatasetSummary write_dataset(const SynthConfig& cfg, const std::string& dir,
                             const nlohmann::json& resolved_config);

// Writes already-built examples in the same layout (no generation).
DatasetSummary write_examples(const std::vector<GroundingExample>& examples,
                              const std::vector<std::string>& splits, const std::string& dir,
                              const nlohmann::json& resolved_config);

struct Dataset {
  std::vector<GroundingExample> examples;
  // Parallel to examples; empty strings when the manifest has no split.
  std::vector<std::string> splits;
  nlohmann::json config;  // from the meta sidecar, null when absent

  // Examples of one split, in manifest order.
  std::vector<GroundingExample> split(const std::string& name) const;
};

// `path` is a dataset directory or a manifest .jsonl file. Feature paths are
// resolved relative to the manifest.
Dataset load_dataset(const std::string& path);

// Parses one manifest line; `base_dir` resolves the feature path.
GroundingExample parse_manifest_line(const nlohmann::json& line, const std::string& base_dir,
                                     std::size_t vocab_size);

// Pseudo-label JSONL: {"id", "span": [b, e] | null, "area", "provenance", "skip"}.
void write_pseudo_labels(const std::string& path, std::span<const PseudoLabelRecord> records);
std::vector<PseudoLabelRecord> read_pseudo_labels(const std::string& path);

// Replaces gold spans with the pseudo-label spans of each id. Examples with no
// usable record are flagged skip. Returns the number of labeled examples.
std::size_t apply_pseudo_labels(std::vector<GroundingExample>& examples,
                                std::span<const PseudoLabelRecord> records);

nlohmann::json spans_to_json(const SpanSet& spans);
SpanSet spans_from_json(const nlohmann::json& j);

// Writes `<path>.meta.json` = {"config": resolved_config, ...extra}.
void write_meta_sidecar(const std::string& path, const nlohmann::json& resolved_config,
                        const nlohmann::json& extra = nlohmann::json::object());

// Whole-file helpers that raise IoError with the path.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace tgb

#endif  // TGB_DATASET_HPP_
