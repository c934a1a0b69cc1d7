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

#include "tgb/example.hpp"

#include <algorithm>

#include "tgb/error.hpp"

namespace tgb {

void MotionFeatureSequence::validate() const {
  if (values.rank() != 2 || values.dim(0) < 1) {
    throw ValidationError("motion features must be T x D with T >= 1, got " +
                          shape_to_string(values.shape()));
  }
  if (!values.all_finite()) throw ValidationError("motion features contain NaN/Inf");
  if (has_grid()) {
    if (raw_grid.rows() != values.rows() ||
        raw_grid.cols() != grid_height * grid_width * 2) {
      throw ValidationError("flow grid " + shape_to_string(raw_grid.shape()) +
                            " does not match " + std::to_string(values.rows()) +
                            " frames of " + std::to_string(grid_height) + "x" +
                            std::to_string(grid_width) + "x2");
    }
    if (!raw_grid.all_finite()) throw ValidationError("flow grid contains NaN/Inf");
  }
}

Tensor<float> frame_aligned_flow(const Tensor<float>& pair_flows, std::size_t num_frames,
                                 std::size_t width) {
  if (num_frames == 0) throw ValidationError("frame_aligned_flow: no frames");
  const std::size_t pairs = num_frames - 1;
  if (pairs > 0 && (pair_flows.rank() != 2 || pair_flows.rows() != pairs ||
                    pair_flows.cols() != width)) {
    throw DimensionError("expected " + std::to_string(pairs) + " x " + std::to_string(width) +
                         " pairwise flows for " + std::to_string(num_frames) + " frames, got " +
                         shape_to_string(pair_flows.shape()));
  }
  Tensor<float> out({num_frames, width});
  for (std::size_t t = 0; t < num_frames && pairs > 0; ++t) {
    const auto src = pair_flows.row(std::min(t, pairs - 1));
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

void QueryTokens::validate() const {
  if (ids.empty()) throw ValidationError("query has no tokens");
  if (ids.front() != kClsTokenId) {
    throw ValidationError("query must start with the CLS token id " +
                          std::to_string(kClsTokenId));
  }
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw ValidationError("token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(vocab_size));
    }
  }
}

}  // namespace tgb
