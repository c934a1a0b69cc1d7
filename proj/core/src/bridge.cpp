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

#include "tgb/bridge.hpp"

#include <cmath>
#include <numeric>

#include "tgb/error.hpp"
#include "tgb/rng.hpp"

namespace tgb {

void BridgeConfig::validate() const {
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw ConfigError("d_model (" + std::to_string(d_model) +
                      ") must be a positive multiple of heads (" +
                      std::to_string(heads) + ")");
  }
  if (head_dim() % 2 != 0) {
    throw ConfigError("per-head width " + std::to_string(head_dim()) +
                      " must be even for RoPE");
  }
  if (layers < 1) throw ConfigError("layers must be >= 1");
  if (ffn_mult < 1) throw ConfigError("ffn_mult must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (vocab_size < 2) throw ConfigError("vocab_size must be >= 2");
  if (max_k < 1) throw ConfigError("max_k must be >= 1");
  if (conv_multiplier < 1) throw ConfigError("conv_multiplier must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
  if (!(rope_base > 1.0)) throw ConfigError("rope_base must exceed 1");
  if ((grid_height == 0) != (grid_width == 0))
    throw ConfigError("grid_height and grid_width must both be set or both be 0");
}

template <typename S>
Bridge<S>::Bridge(BridgeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  rope_.head_dim = cfg_.head_dim();
  rope_.base = cfg_.rope_base;
  rope_.validate();
}

namespace {

std::string layer_name(std::size_t i, const char* leaf) {
  return "layers." + std::to_string(i) + "." + leaf;
}

template <typename S>
Tensor<S> uniform_fan_in(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<S> t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<S>(rng.uniform(-bound, bound));
  return t;
}

std::vector<std::int64_t> iota_positions(std::size_t n) {
  std::vector<std::int64_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

}  // namespace

template <typename S>
void Bridge<S>::init_params(ParamStore<S>& store, std::uint64_t seed) const {
  Rng rng(seed);
  const std::size_t d = cfg_.d_model;
  const std::size_t conv_out = cfg_.feature_dim * cfg_.conv_multiplier;
  auto linear = [&](const std::string& prefix, std::size_t in, std::size_t out,
                    bool bias) {
    store.add(prefix + (bias ? ".weight" : ""), uniform_fan_in<S>({in, out}, in, rng));
    if (bias) store.add(prefix + ".bias", uniform_fan_in<S>({out}, in, rng));
  };
  auto norm = [&](const std::string& prefix, std::size_t width) {
    store.add(prefix + ".gain", Tensor<S>({width}, S(1)));
    store.add(prefix + ".bias", Tensor<S>({width}, S(0)));
  };

  if (cfg_.grid_height > 0) {
    store.add("motion.grid.weight", uniform_fan_in<S>({cfg_.feature_dim, 18}, 18, rng));
    store.add("motion.grid.bias", uniform_fan_in<S>({cfg_.feature_dim}, 18, rng));
  }
  store.add("motion.conv.weight", uniform_fan_in<S>({3, conv_out}, 3, rng));
  store.add("motion.conv.bias", uniform_fan_in<S>({conv_out}, 3, rng));
  linear("motion.mlp1", conv_out, d, true);
  linear("motion.mlp2", d, d, true);

  Tensor<S> emb({cfg_.vocab_size, d});
  for (std::size_t i = 0; i < emb.size(); ++i) emb[i] = static_cast<S>(rng.normal(0.0, 0.02));
  store.add("query.embedding", std::move(emb));

  for (std::size_t i = 0; i < cfg_.layers; ++i) {
    norm(layer_name(i, "motion_norm"), d);
    norm(layer_name(i, "lang_norm"), d);
    linear(layer_name(i, "wq"), d, d, false);
    linear(layer_name(i, "wk"), d, d, false);
    linear(layer_name(i, "wv"), d, d, false);
    linear(layer_name(i, "wo"), d, d, false);
    norm(layer_name(i, "ffn_norm"), d);
    linear(layer_name(i, "ffn1"), d, d * cfg_.ffn_mult, true);
    linear(layer_name(i, "ffn2"), d * cfg_.ffn_mult, d, true);
  }
  norm("final_norm", d);
  if (cfg_.mlp_head) {
    linear("head.hidden", d, d, true);
    linear("head.out", d, 3, true);
  } else {
    linear("head", d, 3, true);
  }
}

template <typename S>
std::vector<std::string> Bridge<S>::parameter_names() const {
  ParamStore<S> tmp;
  init_params(tmp, 0);
  std::vector<std::string> names;
  for (const auto& e : tmp.entries()) names.push_back(e.name);
  return names;
}

template <typename S>
Var Bridge<S>::encode_motion(Graph<S>& g, ParamStore<S>& params,
                             const MotionFeatureSequence& motion) const {
  motion.validate();
  Var desc;
  if (cfg_.grid_height > 0) {
    if (!motion.has_grid() || motion.grid_height != cfg_.grid_height ||
        motion.grid_width != cfg_.grid_width) {
      throw ValidationError("bridge expects " + std::to_string(cfg_.grid_height) +
                            "x" + std::to_string(cfg_.grid_width) +
                            " flow grids for every frame");
    }
    Var grid = g.constant(motion.raw_grid.template cast<S>());
    desc = ag::flow_grid_encode(g, grid, g.param(params, "motion.grid.weight"),
                                g.param(params, "motion.grid.bias"),
                                cfg_.grid_height, cfg_.grid_width);
  } else {
    if (motion.feature_dim() != cfg_.feature_dim) {
      throw ValidationError("motion descriptor width " +
                            std::to_string(motion.feature_dim()) +
                            " does not match configured feature_dim " +
                            std::to_string(cfg_.feature_dim));
    }
    desc = g.constant(motion.values.template cast<S>());
  }
  Var conv = ag::depthwise_conv1d(g, desc, g.param(params, "motion.conv.weight"),
                                  g.param(params, "motion.conv.bias"),
                                  cfg_.conv_multiplier);
  Var h = ag::add_bias(g, ag::matmul(g, conv, g.param(params, "motion.mlp1.weight")),
                       g.param(params, "motion.mlp1.bias"));
  h = ag::gelu(g, h);
  return ag::add_bias(g, ag::matmul(g, h, g.param(params, "motion.mlp2.weight")),
                      g.param(params, "motion.mlp2.bias"));
}

template <typename S>
Var Bridge<S>::embed_query(Graph<S>& g, ParamStore<S>& params,
                           const QueryTokens& query) const {
  if (query.ids.empty()) throw ValidationError("query has no tokens");
  return ag::embedding(g, g.param(params, "query.embedding"),
                       std::span<const int>(query.ids));
}

template <typename S>
typename Bridge<S>::LayerOutput Bridge<S>::cross_attention_layer(
    Graph<S>& g, ParamStore<S>& params, Var motion, Var language,
    std::size_t layer_index, std::span<const std::int64_t> motion_pos,
    std::span<const std::int64_t> language_pos, bool collect_attention,
    Rng* dropout_rng) const {
  const std::size_t hd = cfg_.head_dim();
  auto p = [&](const char* leaf) {
    return g.param(params, layer_name(layer_index, leaf));
  };
  LayerOutput out;
  Var h = ag::layer_norm(g, motion, p("motion_norm.gain"), p("motion_norm.bias"));
  Var l = ag::layer_norm(g, language, p("lang_norm.gain"), p("lang_norm.bias"));
  Var q = ag::rope(g, ag::matmul(g, h, p("wq")), motion_pos, rope_);
  Var k = ag::rope(g, ag::matmul(g, l, p("wk")), language_pos, rope_);
  Var v = ag::matmul(g, l, p("wv"));
  const S inv_sqrt = S(1) / std::sqrt(static_cast<S>(hd));
  std::vector<Var> heads;
  heads.reserve(cfg_.heads);
  for (std::size_t head = 0; head < cfg_.heads; ++head) {
    Var qh = ag::slice_cols(g, q, head * hd, hd);
    Var kh = ag::slice_cols(g, k, head * hd, hd);
    Var vh = ag::slice_cols(g, v, head * hd, hd);
    Var weights = ag::softmax(g, ag::scale(g, ag::matmul_nt(g, qh, kh), inv_sqrt));
    if (collect_attention) out.attention.push_back(g.value(weights));
    heads.push_back(ag::matmul(g, weights, vh));
  }
  Var attn = ag::matmul(g, ag::concat_cols(g, heads), p("wo"));
  if (dropout_rng) attn = ag::dropout(g, attn, cfg_.dropout, *dropout_rng);
  Var x = ag::add(g, motion, attn);

  Var f = ag::layer_norm(g, x, p("ffn_norm.gain"), p("ffn_norm.bias"));
  f = ag::gelu(g, ag::add_bias(g, ag::matmul(g, f, p("ffn1.weight")), p("ffn1.bias")));
  f = ag::add_bias(g, ag::matmul(g, f, p("ffn2.weight")), p("ffn2.bias"));
  if (dropout_rng) f = ag::dropout(g, f, cfg_.dropout, *dropout_rng);
  out.motion = ag::add(g, x, f);
  return out;
}

template <typename S>
typename Bridge<S>::Output Bridge<S>::forward(Graph<S>& g, ParamStore<S>& params,
                                              const MotionFeatureSequence& motion,
                                              const QueryTokens& query,
                                              const ForwardOptions& opts,
                                              Rng* dropout_rng) const {
  if (query.vocab_size != 0 && query.vocab_size != cfg_.vocab_size) {
    throw ValidationError("query vocabulary " + std::to_string(query.vocab_size) +
                          " differs from bridge vocabulary " +
                          std::to_string(cfg_.vocab_size));
  }
  const std::size_t t_len = motion.num_frames();
  const std::size_t n_len = query.ids.size();
  auto motion_pos = opts.motion_positions.empty() ? iota_positions(t_len)
                                                  : opts.motion_positions;
  auto language_pos = opts.language_positions.empty() ? iota_positions(n_len)
                                                      : opts.language_positions;
  if (motion_pos.size() != t_len || language_pos.size() != n_len) {
    throw DimensionError("position lists do not match sequence lengths");
  }
  if (cfg_.dropout <= 0.0) dropout_rng = nullptr;

  Output out;
  Var x = encode_motion(g, params, motion);
  Var lang = embed_query(g, params, query);
  for (std::size_t i = 0; i < cfg_.layers; ++i) {
    auto layer = cross_attention_layer(g, params, x, lang, i, motion_pos,
                                       language_pos, opts.collect_attention,
                                       dropout_rng);
    x = layer.motion;
    if (opts.collect_attention) out.attention.push_back(std::move(layer.attention));
  }
  out.fused = ag::layer_norm(g, x, g.param(params, "final_norm.gain"),
                             g.param(params, "final_norm.bias"));
  if (cfg_.mlp_head) {
    Var h = ag::add_bias(g, ag::matmul(g, out.fused, g.param(params, "head.hidden.weight")),
                         g.param(params, "head.hidden.bias"));
    h = ag::gelu(g, h);
    out.logits = ag::add_bias(g, ag::matmul(g, h, g.param(params, "head.out.weight")),
                              g.param(params, "head.out.bias"));
  } else {
    out.logits = ag::add_bias(g, ag::matmul(g, out.fused, g.param(params, "head.weight")),
                              g.param(params, "head.bias"));
  }
  return out;
}

template <typename S>
Tensor<S> Bridge<S>::infer_logits(ParamStore<S>& params,
                                  const MotionFeatureSequence& motion,
                                  const QueryTokens& query,
                                  const ForwardOptions& opts) const {
  Graph<S> g(false);
  auto out = forward(g, params, motion, query, opts, nullptr);
  return g.value(out.logits);
}

template class Bridge<float>;
template class Bridge<double>;

}  // namespace tgb
