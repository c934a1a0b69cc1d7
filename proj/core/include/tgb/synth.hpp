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

#ifndef TGB_SYNTH_HPP_
#define TGB_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tgb/bootstrap.hpp"
#include "tgb/example.hpp"
#include "tgb/rng.hpp"

namespace tgb {

struct SynthConfig {
  std::size_t num_examples = 200;
  std::size_t min_frames = 32;
  std::size_t max_frames = 32;
  std::size_t feature_dim = 16;
  std::size_t min_spans = 1;
  std::size_t max_spans = 3;
  std::size_t min_span_length = 3;
  std::size_t max_span_length = 8;
  std::size_t vocab_size = 64;
  // Content tokens after CLS.
  std::size_t query_tokens = 3;
  // Std of the Gaussian noise on in-span descriptors, and the per-frame
  // probability of flipping the hidden relevance.
  double noise_sigma = 0.0;
  double signal_amplitude = 3.0;
  // Std of the pure-noise descriptors outside gold spans.
  double background_sigma = 0.5;
  std::uint64_t seed = 7;
  // Fixes token directions and answer vocabularies; datasets sharing a world
  // seed are mutually consistent regardless of `seed`.
  std::uint64_t world_seed = 2024;

  void validate() const;
};

// Unit signal direction for a query: the normalized sum of per-token
// directions, each seeded from (world_seed, token id).
std::vector<double> query_signal_direction(const SynthConfig& cfg,
                                           const std::vector<int>& token_ids);

// Deterministic in (cfg, index): the example RNG is seeded from seed and index
// only, so examples can be generated in any order. Throws ValidationError when
// the drawn spans cannot be packed into the drawn length.
GroundingExample generate_example(const SynthConfig& cfg, std::size_t index);

std::vector<GroundingExample> generate_examples(const SynthConfig& cfg);

enum class Split { kTrain, kVal, kTest };
std::string_view split_name(Split s);
// 80/10/10 by a hash of (seed, index).
Split split_of(std::uint64_t seed, std::size_t index);

// Answers with the reference text when the hidden relevance is >= 0.5 and with
// a seeded distractor drawn from a vocabulary disjoint from all references
// otherwise.
class MockOracle final : public AnswerOracle {
 public:
  explicit MockOracle(std::uint64_t world_seed = SynthConfig{}.world_seed)
      : world_seed_(world_seed) {}

  std::string predict(const GroundingExample& example,
                      std::size_t frame) const override;
  bool correct(const GroundingExample& example, std::size_t frame) const override;

 private:
  std::uint64_t world_seed_;
};

}  // namespace tgb

#endif  // TGB_SYNTH_HPP_
