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

#include "tgb/rope.hpp"

#include <cmath>
#include <vector>

#include "tgb/error.hpp"

namespace tgb {

void RopeConfig::validate() const {
  if (head_dim == 0 || head_dim % 2 != 0) {
    throw ConfigError("RoPE head_dim must be even and positive, got " +
                      std::to_string(head_dim));
  }
  if (!(base > 1.0)) {
    throw ConfigError("RoPE base must exceed 1, got " + std::to_string(base));
  }
}

namespace {

// Inverse frequencies base^(-2i/d) for i in [0, d/2).
std::vector<double> inverse_frequencies(const RopeConfig& cfg) {
  std::vector<double> inv(cfg.head_dim / 2);
  for (std::size_t i = 0; i < inv.size(); ++i) {
    inv[i] = std::pow(cfg.base, -2.0 * static_cast<double>(i) /
                                    static_cast<double>(cfg.head_dim));
  }
  return inv;
}

// Rotates every head slice of every row in place. sign = -1 applies the
// transpose (inverse) rotation, used for the backward pass.
template <typename S>
void rotate_rows(S* data, std::size_t rows, std::size_t width,
                 std::span<const std::int64_t> positions, const RopeConfig& cfg,
                 double sign) {
  const auto inv = inverse_frequencies(cfg);
  const std::size_t heads = width / cfg.head_dim;
  for (std::size_t r = 0; r < rows; ++r) {
    const double pos = static_cast<double>(positions[r]);
    if (pos == 0.0) continue;
    for (std::size_t i = 0; i < inv.size(); ++i) {
      const double angle = sign * pos * inv[i];
      const S c = static_cast<S>(std::cos(angle));
      const S s = static_cast<S>(std::sin(angle));
      for (std::size_t h = 0; h < heads; ++h) {
        S* pair = data + r * width + h * cfg.head_dim + 2 * i;
        const S x0 = pair[0], x1 = pair[1];
        pair[0] = x0 * c - x1 * s;
        pair[1] = x0 * s + x1 * c;
      }
    }
  }
}

void check_shapes(std::size_t rows, std::size_t width, std::size_t npos,
                  const RopeConfig& cfg) {
  cfg.validate();
  if (width % cfg.head_dim != 0) {
    throw DimensionError("RoPE width " + std::to_string(width) +
                         " is not a multiple of head_dim " +
                         std::to_string(cfg.head_dim));
  }
  if (npos != rows) {
    throw DimensionError("RoPE got " + std::to_string(npos) + " positions for " +
                         std::to_string(rows) + " rows");
  }
}

}  // namespace

template <typename S>
Tensor<S> rope_encode(const Tensor<S>& x, std::span<const std::int64_t> positions,
                      const RopeConfig& cfg) {
  cfg.validate();
  if (x.cols() != cfg.head_dim) {
    throw ConfigError("rope_encode: vector width " + std::to_string(x.cols()) +
                      " differs from head_dim " + std::to_string(cfg.head_dim));
  }
  check_shapes(x.rows(), x.cols(), positions.size(), cfg);
  Tensor<S> out = x;
  rotate_rows(out.data(), x.rows(), x.cols(), positions, cfg, 1.0);
  return out;
}

namespace ag {

template <typename S>
Var rope(Graph<S>& g, Var x, std::span<const std::int64_t> positions,
         const RopeConfig& cfg) {
  const auto& xv = g.value(x);
  check_shapes(xv.rows(), xv.cols(), positions.size(), cfg);
  Tensor<S> out = xv;
  rotate_rows(out.data(), xv.rows(), xv.cols(), positions, cfg, 1.0);
  std::vector<std::int64_t> saved(positions.begin(), positions.end());
  return g.record(std::move(out), {x},
                  [x, cfg, saved = std::move(saved)](Graph<S>& g,
                                                     const Tensor<S>& go) {
                    auto* gx = g.grad_sink(x);
                    if (!gx) return;
                    Tensor<S> back = go;
                    rotate_rows(back.data(), back.rows(), back.cols(),
                                std::span<const std::int64_t>(saved), cfg, -1.0);
                    for (std::size_t i = 0; i < back.size(); ++i)
                      (*gx)[i] += back[i];
                  });
}

template Var rope<float>(Graph<float>&, Var, std::span<const std::int64_t>,
                         const RopeConfig&);
template Var rope<double>(Graph<double>&, Var, std::span<const std::int64_t>,
                          const RopeConfig&);

}  // namespace ag

template Tensor<float> rope_encode<float>(const Tensor<float>&,
                                          std::span<const std::int64_t>,
                                          const RopeConfig&);
template Tensor<double> rope_encode<double>(const Tensor<double>&,
                                            std::span<const std::int64_t>,
                                            const RopeConfig&);

}  // namespace tgb
