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

#ifndef TGB_ROPE_HPP_
#define TGB_ROPE_HPP_

#include <cstdint>
#include <span>

#include "tgb/autograd.hpp"
#include "tgb/tensor.hpp"

namespace tgb {

struct RopeConfig {
  std::size_t head_dim = 16;
  double base = 10000.0;

  // Throws ConfigError for an odd or zero head_dim, or base <= 1.
  void validate() const;
};

// Rotates each coordinate pair (2i, 2i+1) of every row by
// position * base^(-2i/head_dim). `x` is L x head_dim. Positions may be
// negative, which applies the inverse rotation.
template <typename S>
Tensor<S> rope_encode(const Tensor<S>& x, std::span<const std::int64_t> positions,
                      const RopeConfig& cfg);

namespace ag {

// Multi-head RoPE: `x` is L x (heads * cfg.head_dim); each head slice is
// rotated independently with the same per-row position.
template <typename S>
Var rope(Graph<S>& g, Var x, std::span<const std::int64_t> positions,
         const RopeConfig& cfg);

}  // namespace ag
}  // namespace tgb

#endif  // TGB_ROPE_HPP_
