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

#include "tgb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "tgb/error.hpp"

namespace tgb::kernels {

template <typename S>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const S* a,
             const S* b, S* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, S(0));
  for (std::size_t i = 0; i < m; ++i) {
    S* crow = c + i * n;
    const S* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const S av = arow[p];
      const S* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename S>
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const S* a,
             const S* b, S* c, bool accumulate) {
  // Transpose once so the inner loop runs over contiguous memory.
  std::vector<S> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(m, k, n, a, bt.data(), c, accumulate);
}

template <typename S>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const S* a,
             const S* b, S* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, S(0));
  for (std::size_t p = 0; p < k; ++p) {
    const S* arow = a + p * m;
    const S* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const S av = arow[i];
      S* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul shape mismatch: " +
                         shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  Tensor<S> c({a.dim(0), b.dim(1)});
  gemm_nn(a.dim(0), a.dim(1), b.dim(1), a.data(), b.data(), c.data(), false);
  return c;
}

template <typename S>
Tensor<S> softmax(const Tensor<S>& x, int axis) {
  const int rank = static_cast<int>(x.rank());
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) {
    throw DimensionError("softmax axis out of range for shape " +
                         shape_to_string(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.dim(i);
  for (int i = axis + 1; i < rank; ++i) inner *= x.dim(i);
  const std::size_t len = x.dim(axis);
  Tensor<S> y(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      S mx = -std::numeric_limits<S>::infinity();
      for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, x[base + i * inner]);
      S total = 0;
      for (std::size_t i = 0; i < len; ++i) {
        const S e = std::exp(x[base + i * inner] - mx);
        y[base + i * inner] = e;
        total += e;
      }
      const S inv = S(1) / total;
      for (std::size_t i = 0; i < len; ++i) y[base + i * inner] *= inv;
    }
  }
  return y;
}

template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gain,
                     const Tensor<S>& bias, S eps) {
  const std::size_t d = x.cols();
  if (gain.size() != d || bias.size() != d) {
    throw DimensionError("layer_norm gain/bias " +
                         shape_to_string(gain.shape()) + " do not match " +
                         shape_to_string(x.shape()));
  }
  Tensor<S> y(x.shape());
  const std::size_t rows = x.size() / d;
  for (std::size_t r = 0; r < rows; ++r) {
    const S* xr = x.data() + r * d;
    S* yr = y.data() + r * d;
    S mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= S(d);
    S var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= S(d);
    const S inv = S(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j)
      yr[j] = (xr[j] - mean) * inv * gain[j] + bias[j];
  }
  return y;
}

template <typename S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x * S(0.70710678118654752440)));
}

template <typename S>
S gelu_grad(S x) {
  const S cdf = S(0.5) * (S(1) + std::erf(x * S(0.70710678118654752440)));
  // 1/sqrt(2*pi)
  const S pdf = std::exp(S(-0.5) * x * x) * S(0.39894228040143267794);
  return cdf + x * pdf;
}

template <typename S>
S log_sum_exp(std::span<const S> row) {
  S mx = -std::numeric_limits<S>::infinity();
  for (S v : row) mx = std::max(mx, v);
  S total = 0;
  for (S v : row) total += std::exp(v - mx);
  return mx + std::log(total);
}

template <typename S>
double cross_entropy_3class(const Tensor<S>& logits, std::span<const int> labels,
                            std::span<const double> class_weights) {
  if (logits.rank() != 2 || logits.dim(1) != 3) {
    throw DimensionError("cross_entropy_3class expects Tx3 logits, got " +
                         shape_to_string(logits.shape()));
  }
  if (labels.size() != logits.dim(0)) {
    throw DimensionError("cross_entropy_3class: " +
                         std::to_string(labels.size()) + " labels for " +
                         std::to_string(logits.dim(0)) + " positions");
  }
  double total = 0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const int y = labels[t];
    if (y < 0 || y > 2) {
      throw ValidationError("label " + std::to_string(y) + " at position " +
                            std::to_string(t) + " is outside {0,1,2}");
    }
    const auto row = logits.row(t);
    const double lse = static_cast<double>(log_sum_exp<S>(row));
    const double w = class_weights.empty() ? 1.0 : class_weights[y];
    total += w * (lse - static_cast<double>(row[y]));
  }
  return labels.empty() ? 0.0 : total / static_cast<double>(labels.size());
}

#define TGB_INSTANTIATE(S)                                                    \
  template void gemm_nn<S>(std::size_t, std::size_t, std::size_t, const S*,   \
                           const S*, S*, bool);                               \
  template void gemm_nt<S>(std::size_t, std::size_t, std::size_t, const S*,   \
                           const S*, S*, bool);                               \
  template void gemm_tn<S>(std::size_t, std::size_t, std::size_t, const S*,   \
                           const S*, S*, bool);                               \
  template Tensor<S> matmul<S>(const Tensor<S>&, const Tensor<S>&);          \
  template Tensor<S> softmax<S>(const Tensor<S>&, int);                       \
  template Tensor<S> layer_norm<S>(const Tensor<S>&, const Tensor<S>&,        \
                                   const Tensor<S>&, S);                      \
  template S gelu<S>(S);                                                      \
  template S gelu_grad<S>(S);                                                 \
  template S log_sum_exp<S>(std::span<const S>);                              \
  template double cross_entropy_3class<S>(                                    \
      const Tensor<S>&, std::span<const int>, std::span<const double>);

TGB_INSTANTIATE(float)
TGB_INSTANTIATE(double)
#undef TGB_INSTANTIATE

}  // namespace tgb::kernels
