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

#include "tgb/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "tgb/error.hpp"
#include "tgb/kernels.hpp"

namespace tgb {

namespace {
std::atomic<BackwardFault> g_fault{BackwardFault::kNone};

template <typename S>
void accumulate(Tensor<S>& dst, const Tensor<S>& src) {
  S* d = dst.data();
  const S* s = src.data();
  for (std::size_t i = 0, n = dst.size(); i < n; ++i) d[i] += s[i];
}
}  // namespace

void set_backward_fault(BackwardFault fault) { g_fault.store(fault); }
BackwardFault backward_fault() { return g_fault.load(); }

template <typename S>
std::size_t Graph<S>::check(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw ValidationError("invalid graph variable " + std::to_string(v.id));
  }
  return static_cast<std::size_t>(v.id);
}

template <typename S>
Var Graph<S>::constant(Tensor<S> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename S>
Var Graph<S>::leaf(Tensor<S> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename S>
Var Graph<S>::param(ParamStore<S>& store, const std::string& name) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return it->second;
  const std::size_t index = store.index_of(name);
  Node n;
  n.value = store.entry(index).value;
  n.requires_grad = grad_enabled_;
  n.store = &store;
  n.store_index = index;
  nodes_.push_back(std::move(n));
  Var v{static_cast<std::int32_t>(nodes_.size() - 1)};
  param_nodes_.emplace(name, v);
  return v;
}

template <typename S>
Var Graph<S>::record(Tensor<S> value, std::initializer_list<Var> parents,
                     BackwardFn fn) {
  bool needs = false;
  if (grad_enabled_) {
    for (Var p : parents) needs = needs || nodes_[check(p)].requires_grad;
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename S>
Var Graph<S>::record(Tensor<S> value, const std::vector<Var>& parents,
                     BackwardFn fn) {
  bool needs = false;
  if (grad_enabled_) {
    for (Var p : parents) needs = needs || nodes_[check(p)].requires_grad;
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename S>
Tensor<S>* Graph<S>::grad_sink(Var v) {
  Node& n = nodes_[check(v)];
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() != n.value.size()) n.grad = Tensor<S>(n.value.shape());
  return &n.grad;
}

template <typename S>
void Graph<S>::backward(Var loss) {
  const std::size_t root = check(loss);
  if (nodes_[root].value.size() != 1) {
    throw DimensionError("backward expects a scalar loss, got " +
                         shape_to_string(nodes_[root].value.shape()));
  }
  if (!nodes_[root].requires_grad) return;
  grad_sink(loss)->fill(S(1));
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) {
      // The closure may grow sibling gradients but never this node's.
      n.backward(*this, n.grad);
    }
    if (n.store) accumulate(n.store->entry(n.store_index).grad, n.grad);
  }
}

namespace ag {

template <typename S>
Var matmul(Graph<S>& g, Var a, Var b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  Tensor<S> out = kernels::matmul(av, bv);
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  return g.record(std::move(out), {a, b},
                  [a, b, m, k, n](Graph<S>& g, const Tensor<S>& go) {
                    if (auto* ga = g.grad_sink(a)) {
                      kernels::gemm_nt(m, n, k, go.data(), g.value(b).data(),
                                       ga->data(), true);
                    }
                    if (auto* gb = g.grad_sink(b)) {
                      if (backward_fault() == BackwardFault::kMatmulRhs) {
                        Tensor<S> tmp(gb->shape());
                        kernels::gemm_tn(k, m, n, g.value(a).data(), go.data(),
                                         tmp.data(), false);
                        for (std::size_t i = 0; i < tmp.size(); ++i)
                          (*gb)[i] += S(1.05) * tmp[i];
                      } else {
                        kernels::gemm_tn(k, m, n, g.value(a).data(), go.data(),
                                         gb->data(), true);
                      }
                    }
                  });
}

template <typename S>
Var matmul_nt(Graph<S>& g, Var a, Var b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(1)) {
    throw DimensionError("matmul_nt shape mismatch: " +
                         shape_to_string(av.shape()) + " x " +
                         shape_to_string(bv.shape()) + "^T");
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(0);
  Tensor<S> out({m, n});
  kernels::gemm_nt(m, k, n, av.data(), bv.data(), out.data(), false);
  return g.record(std::move(out), {a, b},
                  [a, b, m, k, n](Graph<S>& g, const Tensor<S>& go) {
                    // out = A B^T: dA = dOut B, dB = dOut^T A
                    if (auto* ga = g.grad_sink(a)) {
                      kernels::gemm_nn(m, n, k, go.data(), g.value(b).data(),
                                       ga->data(), true);
                    }
                    if (auto* gb = g.grad_sink(b)) {
                      kernels::gemm_tn(n, m, k, go.data(), g.value(a).data(),
                                       gb->data(), true);
                    }
                  });
}

template <typename S>
Var add(Graph<S>& g, Var a, Var b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  if (av.shape() != bv.shape()) {
    throw DimensionError("add shape mismatch: " + shape_to_string(av.shape()) +
                         " vs " + shape_to_string(bv.shape()));
  }
  Tensor<S> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return g.record(std::move(out), {a, b},
                  [a, b](Graph<S>& g, const Tensor<S>& go) {
                    if (auto* ga = g.grad_sink(a)) accumulate(*ga, go);
                    if (auto* gb = g.grad_sink(b)) accumulate(*gb, go);
                  });
}

template <typename S>
Var add_bias(Graph<S>& g, Var x, Var bias) {
  const auto& xv = g.value(x);
  const auto& bv = g.value(bias);
  const std::size_t c = xv.cols();
  if (bv.size() != c) {
    throw DimensionError("add_bias: bias " + shape_to_string(bv.shape()) +
                         " does not match " + shape_to_string(xv.shape()));
  }
  Tensor<S> out = xv;
  const std::size_t r = xv.size() / std::max<std::size_t>(c, 1);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
  return g.record(std::move(out), {x, bias},
                  [x, bias, r, c](Graph<S>& g, const Tensor<S>& go) {
                    if (auto* gx = g.grad_sink(x)) accumulate(*gx, go);
                    if (auto* gb = g.grad_sink(bias)) {
                      for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < c; ++j)
                          (*gb)[j] += go[i * c + j];
                    }
                  });
}

template <typename S>
Var scale(Graph<S>& g, Var x, S factor) {
  Tensor<S> out = g.value(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  return g.record(std::move(out), {x},
                  [x, factor](Graph<S>& g, const Tensor<S>& go) {
                    if (auto* gx = g.grad_sink(x))
                      for (std::size_t i = 0; i < go.size(); ++i)
                        (*gx)[i] += factor * go[i];
                  });
}

template <typename S>
Var gelu(Graph<S>& g, Var x) {
  const auto& xv = g.value(x);
  Tensor<S> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = kernels::gelu(xv[i]);
  return g.record(std::move(out), {x}, [x](Graph<S>& g, const Tensor<S>& go) {
    if (auto* gx = g.grad_sink(x)) {
      const auto& xv = g.value(x);
      for (std::size_t i = 0; i < go.size(); ++i)
        (*gx)[i] += go[i] * kernels::gelu_grad(xv[i]);
    }
  });
}

template <typename S>
Var softmax(Graph<S>& g, Var x) {
  Tensor<S> out = kernels::softmax(g.value(x), -1);
  const Var self{static_cast<std::int32_t>(g.size())};
  return g.record(std::move(out), {x},
                  [x, self](Graph<S>& g, const Tensor<S>& go) {
                    auto* gx = g.grad_sink(x);
                    if (!gx) return;
                    const auto& y = g.value(self);
                    const std::size_t c = y.cols();
                    const std::size_t r = y.size() / c;
                    for (std::size_t i = 0; i < r; ++i) {
                      S dot = 0;
                      for (std::size_t j = 0; j < c; ++j)
                        dot += go[i * c + j] * y[i * c + j];
                      for (std::size_t j = 0; j < c; ++j)
                        (*gx)[i * c + j] += y[i * c + j] * (go[i * c + j] - dot);
                    }
                  });
}

template <typename S>
Var layer_norm(Graph<S>& g, Var x, Var gain, Var bias, S eps) {
  const auto& xv = g.value(x);
  const auto& gv = g.value(gain);
  const auto& bv = g.value(bias);
  const std::size_t d = xv.cols();
  if (gv.size() != d || bv.size() != d) {
    throw DimensionError("layer_norm gain/bias " + shape_to_string(gv.shape()) +
                         " do not match " + shape_to_string(xv.shape()));
  }
  const std::size_t rows = xv.size() / d;
  Tensor<S> xhat(xv.shape());
  std::vector<S> inv_std(rows);
  Tensor<S> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const S* xr = xv.data() + r * d;
    S mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= S(d);
    S var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= S(d);
    const S inv = S(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const S h = (xr[j] - mean) * inv;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return g.record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, d, rows, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Graph<S>& g, const Tensor<S>& go) {
        const auto& gv = g.value(gain);
        if (auto* gg = g.grad_sink(gain)) {
          const S fudge =
              backward_fault() == BackwardFault::kLayerNormGain ? S(1.05) : S(1);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j)
              (*gg)[j] += fudge * go[r * d + j] * xhat[r * d + j];
        }
        if (auto* gb = g.grad_sink(bias)) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) (*gb)[j] += go[r * d + j];
        }
        if (auto* gx = g.grad_sink(x)) {
          for (std::size_t r = 0; r < rows; ++r) {
            S sum_dh = 0, sum_dh_h = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const S dh = go[r * d + j] * gv[j];
              sum_dh += dh;
              sum_dh_h += dh * xhat[r * d + j];
            }
            const S inv_d = S(1) / S(d);
            for (std::size_t j = 0; j < d; ++j) {
              const S dh = go[r * d + j] * gv[j];
              (*gx)[r * d + j] += inv_std[r] * (dh - inv_d * sum_dh -
                                               xhat[r * d + j] * inv_d * sum_dh_h);
            }
          }
        }
      });
}

template <typename S>
Var embedding(Graph<S>& g, Var table, std::span<const int> ids) {
  const auto& tv = g.value(table);
  const std::size_t vocab = tv.dim(0), d = tv.dim(1);
  Tensor<S> out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw ValidationError("token id " + std::to_string(id) +
                            " is outside the vocabulary of size " +
                            std::to_string(vocab));
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(id) * d, d,
                out.data() + i * d);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return g.record(std::move(out), {table},
                  [table, d, saved = std::move(saved)](Graph<S>& g,
                                                       const Tensor<S>& go) {
                    auto* gt = g.grad_sink(table);
                    if (!gt) return;
                    for (std::size_t i = 0; i < saved.size(); ++i) {
                      S* row = gt->data() + static_cast<std::size_t>(saved[i]) * d;
                      for (std::size_t j = 0; j < d; ++j) row[j] += go[i * d + j];
                    }
                  });
}

template <typename S>
Var slice_cols(Graph<S>& g, Var x, std::size_t begin, std::size_t count) {
  const auto& xv = g.value(x);
  const std::size_t c = xv.cols();
  if (begin + count > c) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " +
                         shape_to_string(xv.shape()));
  }
  const std::size_t r = xv.size() / c;
  Tensor<S> out({r, count});
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(xv.data() + i * c + begin, count, out.data() + i * count);
  return g.record(std::move(out), {x},
                  [x, begin, count, r, c](Graph<S>& g, const Tensor<S>& go) {
                    if (auto* gx = g.grad_sink(x))
                      for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < count; ++j)
                          (*gx)[i * c + begin + j] += go[i * count + j];
                  });
}

template <typename S>
Var concat_cols(Graph<S>& g, const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t r = g.value(parts[0]).rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    const auto& pv = g.value(p);
    if (pv.rows() != r) {
      throw DimensionError("concat_cols row mismatch: " +
                           shape_to_string(pv.shape()));
    }
    widths.push_back(pv.cols());
    total += pv.cols();
  }
  Tensor<S> out({r, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = g.value(parts[k]);
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(pv.data() + i * widths[k], widths[k],
                  out.data() + i * total + off);
    off += widths[k];
  }
  return g.record(std::move(out), parts,
                  [parts, widths, r, total](Graph<S>& g, const Tensor<S>& go) {
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < parts.size(); ++k) {
                      if (auto* gp = g.grad_sink(parts[k])) {
                        for (std::size_t i = 0; i < r; ++i)
                          for (std::size_t j = 0; j < widths[k]; ++j)
                            (*gp)[i * widths[k] + j] += go[i * total + off + j];
                      }
                      off += widths[k];
                    }
                  });
}

template <typename S>
Var column(Graph<S>& g, Var x, std::size_t c) {
  const auto& xv = g.value(x);
  const std::size_t cols = xv.cols();
  if (c >= cols) {
    throw DimensionError("column " + std::to_string(c) + " out of " +
                         shape_to_string(xv.shape()));
  }
  const std::size_t r = xv.size() / cols;
  Tensor<S> out({r});
  for (std::size_t i = 0; i < r; ++i) out[i] = xv[i * cols + c];
  return g.record(std::move(out), {x},
                  [x, c, cols, r](Graph<S>& g, const Tensor<S>& go) {
                    if (auto* gx = g.grad_sink(x))
                      for (std::size_t i = 0; i < r; ++i)
                        (*gx)[i * cols + c] += go[i];
                  });
}

template <typename S>
Var sum(Graph<S>& g, Var x) {
  const auto& xv = g.value(x);
  S total = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) total += xv[i];
  return g.record(Tensor<S>({1}, std::vector<S>{total}), {x},
                  [x](Graph<S>& g, const Tensor<S>& go) {
                    if (auto* gx = g.grad_sink(x))
                      for (std::size_t i = 0; i < gx->size(); ++i)
                        (*gx)[i] += go[0];
                  });
}

template <typename S>
Var dropout(Graph<S>& g, Var x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be below 1");
  const auto& xv = g.value(x);
  const S keep_scale = S(1.0 / (1.0 - p));
  std::vector<S> mask(xv.size());
  Tensor<S> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mask[i] = rng.uniform() < p ? S(0) : keep_scale;
    out[i] = xv[i] * mask[i];
  }
  return g.record(std::move(out), {x},
                  [x, mask = std::move(mask)](Graph<S>& g, const Tensor<S>& go) {
                    if (auto* gx = g.grad_sink(x))
                      for (std::size_t i = 0; i < go.size(); ++i)
                        (*gx)[i] += go[i] * mask[i];
                  });
}

template <typename S>
Var depthwise_conv1d(Graph<S>& g, Var x, Var kernel, Var bias,
                     std::size_t multiplier) {
  const auto& xv = g.value(x);
  const auto& kv = g.value(kernel);
  const auto& bv = g.value(bias);
  const std::size_t t_len = xv.dim(0), cin = xv.dim(1);
  const std::size_t cout = cin * multiplier;
  if (kv.rank() != 2 || kv.dim(0) != 3 || kv.dim(1) != cout || bv.size() != cout) {
    throw DimensionError("depthwise_conv1d kernel " + shape_to_string(kv.shape()) +
                         " / bias " + shape_to_string(bv.shape()) +
                         " do not match input " + shape_to_string(xv.shape()));
  }
  Tensor<S> out({t_len, cout});
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t m = 0; m < multiplier; ++m) {
        const std::size_t oc = c * multiplier + m;
        S acc = bv[oc];
        for (std::size_t tap = 0; tap < 3; ++tap) {
          const std::ptrdiff_t src =
              static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(tap) - 1;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
          acc += kv[tap * cout + oc] * xv[static_cast<std::size_t>(src) * cin + c];
        }
        out[t * cout + oc] = acc;
      }
    }
  }
  return g.record(
      std::move(out), {x, kernel, bias},
      [x, kernel, bias, t_len, cin, cout, multiplier](Graph<S>& g,
                                                      const Tensor<S>& go) {
        const auto& xv = g.value(x);
        const auto& kv = g.value(kernel);
        auto* gx = g.grad_sink(x);
        auto* gk = g.grad_sink(kernel);
        auto* gb = g.grad_sink(bias);
        for (std::size_t t = 0; t < t_len; ++t) {
          for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t m = 0; m < multiplier; ++m) {
              const std::size_t oc = c * multiplier + m;
              const S d = go[t * cout + oc];
              if (gb) (*gb)[oc] += d;
              for (std::size_t tap = 0; tap < 3; ++tap) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) +
                                           static_cast<std::ptrdiff_t>(tap) - 1;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(t_len)) continue;
                const std::size_t si = static_cast<std::size_t>(src) * cin + c;
                if (gk) (*gk)[tap * cout + oc] += d * xv[si];
                if (gx) (*gx)[si] += d * kv[tap * cout + oc];
              }
            }
          }
        }
      });
}

template <typename S>
Var flow_grid_encode(Graph<S>& g, Var grid, Var kernel, Var bias,
                     std::size_t height, std::size_t width) {
  const auto& gv = g.value(grid);
  const auto& kv = g.value(kernel);
  const auto& bv = g.value(bias);
  const std::size_t t_len = gv.dim(0);
  const std::size_t cout = kv.dim(0);
  if (gv.cols() != height * width * 2 || kv.cols() != 18 || bv.size() != cout) {
    throw DimensionError("flow_grid_encode: grid " + shape_to_string(gv.shape()) +
                         ", kernel " + shape_to_string(kv.shape()) +
                         " incompatible with " + std::to_string(height) + "x" +
                         std::to_string(width) + " flow grids");
  }
  const std::size_t cells = height * width;
  // Pre-activation conv outputs, kept for the backward pass.
  Tensor<S> pre({t_len, cells * cout});
  Tensor<S> out({t_len, cout});
  auto tap_index = [&](std::size_t y, std::size_t xx, int dy, int dx,
                       std::size_t& idx) {
    const auto sy = static_cast<std::ptrdiff_t>(y) + dy;
    const auto sx = static_cast<std::ptrdiff_t>(xx) + dx;
    if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(height) ||
        sx >= static_cast<std::ptrdiff_t>(width))
      return false;
    idx = (static_cast<std::size_t>(sy) * width + static_cast<std::size_t>(sx)) * 2;
    return true;
  };
  for (std::size_t t = 0; t < t_len; ++t) {
    const S* frame = gv.data() + t * cells * 2;
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t xx = 0; xx < width; ++xx) {
        for (std::size_t oc = 0; oc < cout; ++oc) {
          S acc = bv[oc];
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              std::size_t idx;
              if (!tap_index(y, xx, dy, dx, idx)) continue;
              const std::size_t k = static_cast<std::size_t>((dy + 1) * 3 + (dx + 1)) * 2;
              acc += kv[oc * 18 + k] * frame[idx] + kv[oc * 18 + k + 1] * frame[idx + 1];
            }
          }
          pre[t * cells * cout + (y * width + xx) * cout + oc] = acc;
          out[t * cout + oc] += kernels::gelu(acc) / S(cells);
        }
      }
    }
  }
  return g.record(
      std::move(out), {grid, kernel, bias},
      [grid, kernel, bias, height, width, t_len, cout, cells,
       pre = std::move(pre)](Graph<S>& g, const Tensor<S>& go) {
        const auto& gv = g.value(grid);
        const auto& kv = g.value(kernel);
        auto* ggrid = g.grad_sink(grid);
        auto* gk = g.grad_sink(kernel);
        auto* gb = g.grad_sink(bias);
        for (std::size_t t = 0; t < t_len; ++t) {
          const S* frame = gv.data() + t * cells * 2;
          for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t xx = 0; xx < width; ++xx) {
              for (std::size_t oc = 0; oc < cout; ++oc) {
                const S a = pre[t * cells * cout + (y * width + xx) * cout + oc];
                const S d = go[t * cout + oc] / S(cells) * kernels::gelu_grad(a);
                if (gb) (*gb)[oc] += d;
                for (int dy = -1; dy <= 1; ++dy) {
                  for (int dx = -1; dx <= 1; ++dx) {
                    const auto sy = static_cast<std::ptrdiff_t>(y) + dy;
                    const auto sx = static_cast<std::ptrdiff_t>(xx) + dx;
                    if (sy < 0 || sx < 0 ||
                        sy >= static_cast<std::ptrdiff_t>(height) ||
                        sx >= static_cast<std::ptrdiff_t>(width))
                      continue;
                    const std::size_t idx = (static_cast<std::size_t>(sy) * width +
                                             static_cast<std::size_t>(sx)) * 2;
                    const std::size_t k =
                        static_cast<std::size_t>((dy + 1) * 3 + (dx + 1)) * 2;
                    if (gk) {
                      (*gk)[oc * 18 + k] += d * frame[idx];
                      (*gk)[oc * 18 + k + 1] += d * frame[idx + 1];
                    }
                    if (ggrid) {
                      S* gf = ggrid->data() + t * cells * 2;
                      gf[idx] += d * kv[oc * 18 + k];
                      gf[idx + 1] += d * kv[oc * 18 + k + 1];
                    }
                  }
                }
              }
            }
          }
        }
      });
}

template <typename S>
Var cross_entropy_3class(Graph<S>& g, Var logits, std::span<const int> labels,
                         std::span<const double> class_weights) {
  const auto& lv = g.value(logits);
  const double loss = kernels::cross_entropy_3class(lv, labels, class_weights);
  std::vector<int> saved(labels.begin(), labels.end());
  std::vector<double> weights(class_weights.begin(), class_weights.end());
  return g.record(
      Tensor<S>({1}, std::vector<S>{static_cast<S>(loss)}), {logits},
      [logits, saved = std::move(saved), weights = std::move(weights)](
          Graph<S>& g, const Tensor<S>& go) {
        auto* gl = g.grad_sink(logits);
        if (!gl) return;
        const auto& lv = g.value(logits);
        const S inv_t = S(1) / S(saved.size());
        for (std::size_t t = 0; t < saved.size(); ++t) {
          const auto row = lv.row(t);
          const S lse = kernels::log_sum_exp<S>(row);
          const int y = saved[t];
          const S w = weights.empty() ? S(1) : static_cast<S>(weights[y]);
          for (std::size_t c = 0; c < 3; ++c) {
            const S p = std::exp(row[c] - lse);
            (*gl)[t * 3 + c] += go[0] * inv_t * w * (p - (static_cast<int>(c) == y ? S(1) : S(0)));
          }
        }
      });
}

#define TGB_INSTANTIATE(S)                                                     \
  template Var matmul<S>(Graph<S>&, Var, Var);                                 \
  template Var matmul_nt<S>(Graph<S>&, Var, Var);                              \
  template Var add<S>(Graph<S>&, Var, Var);                                    \
  template Var add_bias<S>(Graph<S>&, Var, Var);                               \
  template Var scale<S>(Graph<S>&, Var, S);                                    \
  template Var gelu<S>(Graph<S>&, Var);                                        \
  template Var softmax<S>(Graph<S>&, Var);                                     \
  template Var layer_norm<S>(Graph<S>&, Var, Var, Var, S);                     \
  template Var embedding<S>(Graph<S>&, Var, std::span<const int>);             \
  template Var slice_cols<S>(Graph<S>&, Var, std::size_t, std::size_t);        \
  template Var concat_cols<S>(Graph<S>&, const std::vector<Var>&);             \
  template Var column<S>(Graph<S>&, Var, std::size_t);                         \
  template Var sum<S>(Graph<S>&, Var);                                         \
  template Var dropout<S>(Graph<S>&, Var, double, Rng&);                       \
  template Var depthwise_conv1d<S>(Graph<S>&, Var, Var, Var, std::size_t);     \
  template Var flow_grid_encode<S>(Graph<S>&, Var, Var, Var, std::size_t,      \
                                   std::size_t);                               \
  template Var cross_entropy_3class<S>(Graph<S>&, Var, std::span<const int>,   \
                                       std::span<const double>);

TGB_INSTANTIATE(float)
TGB_INSTANTIATE(double)
#undef TGB_INSTANTIATE

}  // namespace ag

template class Graph<float>;
template class Graph<double>;

}  // namespace tgb
