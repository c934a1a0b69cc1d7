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

#ifndef TGB_GRADCHECK_HPP_
#define TGB_GRADCHECK_HPP_

#include <functional>
#include <string>
#include <vector>

#include "tgb/bridge.hpp"
#include "tgb/tensor.hpp"

namespace tgb {

// One entry per parameter tensor. max_rel_error is the worst absolute
// discrepancy over the tensor divided by the tensor's gradient scale,
// max(|analytic|_inf, |numeric|_inf, floor). Entry-wise ratios are kept for
// diagnosis only: for entries whose gradient is orders of magnitude below the
// rest of the tensor, central-difference truncation error dominates them.
struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double max_entry_rel_error = 0.0;
  double grad_scale = 0.0;
  std::size_t worst_index = 0;
  bool finite = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double worst_rel_error() const;
  // Every entry finite and below `tol`.
  bool passed(double tol) const;
  // First failing entry, or nullptr.
  const GradCheckEntry* first_failure(double tol) const;
};

struct GradCheckOptions {
  double h = 1e-3;
  // Floor of the gradient scale in the relative error denominator.
  double rel_floor = 1e-6;
};

// Loss evaluated at the current parameter values. When `with_grad` is true the
// callee must leave d(loss)/d(param) in the store's gradient buffers (after
// zeroing them).
template <typename S>
using LossFn = std::function<double(ParamStore<S>& params, bool with_grad)>;

// Compares analytic gradients against central differences
// (f(p+h) - f(p-h)) / 2h accumulated in double precision, entry by entry. A
// non-finite loss marks the parameter as failed instead of throwing.
template <typename S>
GradCheckReport finite_diff_check(const LossFn<S>& f, ParamStore<S>& params,
                                  const GradCheckOptions& opts = {});

// Full-model check: a Bridge<double> on a random example, with the RC
// cross-entropy plus (optionally) the soft-path span-alignment loss.
struct BridgeGradCheckSetup {
  BridgeConfig bridge;
  std::size_t frames = 6;
  std::size_t tokens = 4;  // including CLS
  std::uint64_t seed = 1;
  bool joint = true;
  double tau = 1.0;
  std::size_t K = 2;
  // The N(0, 0.02) embedding init leaves lang_norm so curved that h = 1e-3
  // truncation error dominates; embeddings are redrawn at this std before the
  // check. 0 keeps the initializer's values.
  double embedding_std = 1.0;

  // T=6, N=4, d_model=8, 2 heads, 2 layers, 4-dim descriptors, vocab 16.
  static BridgeGradCheckSetup tiny();
};

GradCheckReport check_bridge_gradients(const BridgeGradCheckSetup& setup,
                                       const GradCheckOptions& opts = {});

}  // namespace tgb

#endif  // TGB_GRADCHECK_HPP_
