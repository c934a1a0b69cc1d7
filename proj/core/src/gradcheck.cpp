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

#include "tgb/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tgb {

double GradCheckReport::worst_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) {
    if (!e.finite) return INFINITY;
    worst = std::max(worst, e.max_rel_error);
  }
  return worst;
}

bool GradCheckReport::passed(double tol) const {
  return first_failure(tol) == nullptr;
}

const GradCheckEntry* GradCheckReport::first_failure(double tol) const {
  for (const auto& e : entries) {
    if (!e.finite || !(e.max_rel_error < tol)) return &e;
  }
  return nullptr;
}

template <typename S>
GradCheckReport finite_diff_check(const LossFn<S>& f, ParamStore<S>& params,
                                  const GradCheckOptions& opts) {
  GradCheckReport report;
  const double base_loss = f(params, true);
  // Snapshot analytic gradients before the perturbation loop reuses buffers.
  std::vector<Tensor<S>> analytic;
  analytic.reserve(params.size());
  for (const auto& e : params.entries()) analytic.push_back(e.grad);

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& entry = params.entry(pi);
    GradCheckEntry out;
    out.name = entry.name;
    out.finite = std::isfinite(base_loss);
    for (std::size_t i = 0; i < entry.value.size() && out.finite; ++i) {
      const S original = entry.value[i];
      entry.value[i] = static_cast<S>(static_cast<double>(original) + opts.h);
      const double up = f(params, false);
      entry.value[i] = static_cast<S>(static_cast<double>(original) - opts.h);
      const double down = f(params, false);
      entry.value[i] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        out.finite = false;
        out.worst_index = i;
        break;
      }
      const double numeric = (up - down) / (2.0 * opts.h);
      const double a = static_cast<double>(analytic[pi][i]);
      const double abs_err = std::abs(a - numeric);
      out.grad_scale = std::max({out.grad_scale, std::abs(a), std::abs(numeric)});
      const double entry_rel =
          abs_err / std::max({std::abs(a), std::abs(numeric), opts.rel_floor});
      out.max_entry_rel_error = std::max(out.max_entry_rel_error, entry_rel);
      if (abs_err > out.max_abs_error) {
        out.max_abs_error = abs_err;
        out.worst_index = i;
      }
    }
    out.max_rel_error = out.max_abs_error / std::max(out.grad_scale, opts.rel_floor);
    report.entries.push_back(out);
  }
  return report;
}

template GradCheckReport finite_diff_check<float>(const LossFn<float>&,
                                                  ParamStore<float>&,
                                                  const GradCheckOptions&);
template GradCheckReport finite_diff_check<double>(const LossFn<double>&,
                                                   ParamStore<double>&,
                                                   const GradCheckOptions&);

}  // namespace tgb
