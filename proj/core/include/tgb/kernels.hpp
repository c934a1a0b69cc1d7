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

#ifndef TGB_KERNELS_HPP_
#define TGB_KERNELS_HPP_

#include <cstddef>
#include <span>

#include "tgb/tensor.hpp"

// Tape-free dense kernels. The autograd ops in autograd.hpp call these for the
// forward pass; tests use them directly.
namespace tgb::kernels {

// C[m x n] (+)= A[m x k] * B[k x n]
template <typename S>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const S* a,
             const S* b, S* c, bool accumulate);
// C[m x n] (+)= A[m x k] * B[n x k]^T
template <typename S>
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const S* a,
             const S* b, S* c, bool accumulate);
// C[m x n] (+)= A[k x m]^T * B[k x n]
template <typename S>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const S* a,
             const S* b, S* c, bool accumulate);

// Matrix product of two rank-2 tensors. Throws DimensionError naming both
// shapes when the inner dimensions differ.
template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);

// Max-subtracted softmax along `axis` (negative values count from the end).
template <typename S>
Tensor<S> softmax(const Tensor<S>& x, int axis = -1);

// Per-row normalization over the last dimension followed by gain/bias.
template <typename S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gain,
                     const Tensor<S>& bias, S eps = S(1e-5));

// GELU, exact erf form.
template <typename S>
S gelu(S x);
template <typename S>
S gelu_grad(S x);

// Mean over positions of the weighted negative log-softmax probability of the
// true class. `logits` is T x 3, labels are 0/1/2.
template <typename S>
double cross_entropy_3class(const Tensor<S>& logits, std::span<const int> labels,
                            std::span<const double> class_weights);

// Natural log of sum(exp(row)) computed stably.
template <typename S>
S log_sum_exp(std::span<const S> row);

}  // namespace tgb::kernels

#endif  // TGB_KERNELS_HPP_
