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

#ifndef TGB_EXAMPLE_HPP_
#define TGB_EXAMPLE_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "tgb/spans.hpp"
#include "tgb/tensor.hpp"

namespace tgb {

// Per-frame motion descriptors: values is T x D. The optional raw grid holds
// T downsampled flow fields of grid_height x grid_width x 2, flattened per
// frame in (y, x, channel) order.
struct MotionFeatureSequence {
  Tensor<float> values;
  Tensor<float> raw_grid;
  std::size_t grid_height = 0;
  std::size_t grid_width = 0;

  std::size_t num_frames() const { return values.rows(); }
  std::size_t feature_dim() const { return values.cols(); }
  bool has_grid() const { return !raw_grid.empty(); }

  // T >= 1, finite values, grid frame count matches.
  void validate() const;
};

// Flow is measured between consecutive frames, so T frames give T - 1 rows.
// Row t describes frames (t, t + 1); the last row is repeated so that motion
// index t lines up with frame t. A single frame gets one zero row of width D.
Tensor<float> frame_aligned_flow(const Tensor<float>& pair_flows, std::size_t num_frames,
                                 std::size_t width);

inline constexpr int kClsTokenId = 0;

struct QueryTokens {
  std::vector<int> ids;
  std::size_t vocab_size = 0;

  // Non-empty, starts with CLS, every id below vocab_size.
  void validate() const;
};

struct GroundingExample {
  std::string id;
  MotionFeatureSequence motion;
  QueryTokens query;
  SpanSet gold_spans;
  std::string answer;
  // Hidden per-frame relevance in [0, 1], consumed by the mock oracle.
  std::vector<double> relevance;
  // Set by pseudo-labelling when no usable span was found.
  bool skip = false;

  std::size_t num_frames() const { return motion.num_frames(); }
};

}  // namespace tgb

#endif  // TGB_EXAMPLE_HPP_
