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

#ifndef TGB_BRIDGE_HPP_
#define TGB_BRIDGE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "tgb/autograd.hpp"
#include "tgb/example.hpp"
#include "tgb/rope.hpp"
#include "tgb/tensor.hpp"

namespace tgb {

struct BridgeConfig {
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t layers = 6;
  std::size_t ffn_mult = 4;
  std::size_t feature_dim = 16;  // D_of
  std::size_t vocab_size = 64;
  std::size_t max_k = 2;
  double dropout = 0.0;
  double rope_base = 10000.0;
  // Kernels per descriptor channel in the temporal depthwise convolution.
  std::size_t conv_multiplier = 3;
  // Two-layer RC head instead of a single linear map.
  bool mlp_head = false;
  // Nonzero enables the 2-D flow-grid front end for raw grids of this size.
  std::size_t grid_height = 0;
  std::size_t grid_width = 0;

  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;
};

struct ForwardOptions {
  // Defaults are 0..T-1 and 0..N-1; language positions travel with tokens.
  std::vector<std::int64_t> motion_positions;
  std::vector<std::int64_t> language_positions;
  bool collect_attention = false;
};

// Temporal Grounding Bridge: motion encoder, query embedding, a stack of
// pre-norm RoPE cross-attention blocks and the per-position RC head.
//
// Motion tokens only attend to language tokens. Queries carry motion positions
// and keys carry language positions, each counted from 0; values stay
// un-rotated.
template <typename S>
class Bridge {
 public:
  explicit Bridge(BridgeConfig cfg);

  const BridgeConfig& config() const { return cfg_; }

  // Registers every parameter with uniform(+-1/sqrt(fan_in)) weights,
  // N(0, 0.02) embeddings and unit/zero norms.
  void init_params(ParamStore<S>& store, std::uint64_t seed) const;

  // Parameter names grouped by module, in registration order.
  std::vector<std::string> parameter_names() const;

  // T x d_model.
  Var encode_motion(Graph<S>& g, ParamStore<S>& params,
                    const MotionFeatureSequence& motion) const;
  // N x d_model.
  Var embed_query(Graph<S>& g, ParamStore<S>& params,
                  const QueryTokens& query) const;

  struct LayerOutput {
    Var motion;
    // heads tensors of T x N attention weights, when requested.
    std::vector<Tensor<S>> attention;
  };
  LayerOutput cross_attention_layer(Graph<S>& g, ParamStore<S>& params, Var motion,
                                    Var language, std::size_t layer_index,
                                    std::span<const std::int64_t> motion_pos,
                                    std::span<const std::int64_t> language_pos,
                                    bool collect_attention, Rng* dropout_rng) const;

  struct Output {
    Var fused;   // E_R, T x d_model
    Var logits;  // T x 3, [BEGIN, END, NONE]
    // attention[layer][head], T x N
    std::vector<std::vector<Tensor<S>>> attention;
  };
  // `dropout_rng` may be null when dropout is 0 or during inference.
  Output forward(Graph<S>& g, ParamStore<S>& params,
                 const MotionFeatureSequence& motion, const QueryTokens& query,
                 const ForwardOptions& opts = {}, Rng* dropout_rng = nullptr) const;

  // Gradient-free forward returning the logits.
  Tensor<S> infer_logits(ParamStore<S>& params, const MotionFeatureSequence& motion,
                         const QueryTokens& query,
                         const ForwardOptions& opts = {}) const;

 private:
  BridgeConfig cfg_;
  RopeConfig rope_;
};

extern template class Bridge<float>;
extern template class Bridge<double>;

}  // namespace tgb

#endif  // TGB_BRIDGE_HPP_
