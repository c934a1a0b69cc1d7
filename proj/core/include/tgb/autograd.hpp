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

#ifndef TGB_AUTOGRAD_HPP_
#define TGB_AUTOGRAD_HPP_

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgb/rng.hpp"
#include "tgb/tensor.hpp"

namespace tgb {

// Handle to a node recorded on a Graph.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Each op appends one node holding its forward value and a
// closure that scatters the node's gradient into its parents. Parameters bound
// through param() receive their gradient in the owning ParamStore when
// backward() finishes.
//
// A Graph is confined to one thread. With grad disabled, no closures are kept
// and the tape only owns forward values.
template <typename S>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor<S>& out_grad)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Var constant(Tensor<S> value);
  // Differentiable input not owned by any ParamStore.
  Var leaf(Tensor<S> value);
  // Binds a named parameter; repeated calls return the same node.
  Var param(ParamStore<S>& store, const std::string& name);

  // Appends an op node. `fn` is dropped when no parent requires grad.
  Var record(Tensor<S> value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor<S> value, const std::vector<Var>& parents, BackwardFn fn);

  const Tensor<S>& value(Var v) const { return nodes_[check(v)].value; }
  // Gradient after backward(); empty tensor when the node was not reached.
  const Tensor<S>& grad(Var v) const { return nodes_[check(v)].grad; }
  bool requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }
  // Gradient accumulator for a parent, or nullptr when it needs none.
  Tensor<S>* grad_sink(Var v);

  // Seeds d(loss)/d(loss) = 1 and runs the tape backwards. Parameter gradients
  // are added to their ParamStore entries.
  void backward(Var loss);

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;
    BackwardFn backward;
    bool requires_grad = false;
    ParamStore<S>* store = nullptr;
    std::size_t store_index = 0;
  };

  std::size_t check(Var v) const;

  // deque: values handed out by reference stay valid as nodes are appended.
  std::deque<Node> nodes_;
  std::unordered_map<std::string, Var> param_nodes_;
  bool grad_enabled_;
};

// Negative controls for gradient verification. A fault perturbs one backward
// formula so the checker has something to catch.
enum class BackwardFault { kNone, kLayerNormGain, kMatmulRhs };
void set_backward_fault(BackwardFault fault);
BackwardFault backward_fault();

namespace ag {

template <typename S> Var matmul(Graph<S>& g, Var a, Var b);
// a * b^T
template <typename S> Var matmul_nt(Graph<S>& g, Var a, Var b);
template <typename S> Var add(Graph<S>& g, Var a, Var b);
// Adds a length-C vector to every row of an R x C matrix.
template <typename S> Var add_bias(Graph<S>& g, Var x, Var bias);
template <typename S> Var scale(Graph<S>& g, Var x, S factor);
template <typename S> Var gelu(Graph<S>& g, Var x);
// Softmax over the last axis.
template <typename S> Var softmax(Graph<S>& g, Var x);
template <typename S>
Var layer_norm(Graph<S>& g, Var x, Var gain, Var bias, S eps = S(1e-5));
// Row lookup into a V x D table; ids are validated against V.
template <typename S>
Var embedding(Graph<S>& g, Var table, std::span<const int> ids);
template <typename S>
Var slice_cols(Graph<S>& g, Var x, std::size_t begin, std::size_t count);
template <typename S> Var concat_cols(Graph<S>& g, const std::vector<Var>& parts);
// Selects column c of an R x C matrix as a length-R vector.
template <typename S> Var column(Graph<S>& g, Var x, std::size_t c);
template <typename S> Var sum(Graph<S>& g, Var x);
// Inverted dropout; identity when p == 0.
template <typename S> Var dropout(Graph<S>& g, Var x, double p, Rng& rng);

// Temporal depthwise convolution, kernel 3, zero "same" padding.
// x: T x C, kernel: 3 x (C*multiplier), bias: C*multiplier.
// Output channel c*multiplier + j filters input channel c.
template <typename S>
Var depthwise_conv1d(Graph<S>& g, Var x, Var kernel, Var bias,
                     std::size_t multiplier);

// Per-frame 3x3 "same" convolution over a 2-channel flow grid followed by GELU
// and a spatial mean. grid: T x (H*W*2) with (y, x, channel) order;
// kernel: Cout x 18 with (ky, kx, channel) order; bias: Cout. Output T x Cout.
template <typename S>
Var flow_grid_encode(Graph<S>& g, Var grid, Var kernel, Var bias,
                     std::size_t height, std::size_t width);

// Mean weighted 3-class cross-entropy; returns a 1-element node.
template <typename S>
Var cross_entropy_3class(Graph<S>& g, Var logits, std::span<const int> labels,
                         std::span<const double> class_weights);

}  // namespace ag
}  // namespace tgb

#endif  // TGB_AUTOGRAD_HPP_
